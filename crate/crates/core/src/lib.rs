pub mod algebra;
pub mod axioms;
pub mod bv;
pub mod error;
pub mod homotopy;
pub mod linalg;
pub mod master;
pub mod moduli;
pub mod random;
pub mod scalar;
pub mod series;
pub mod sign;
pub mod spaces;

pub use error::{Error, Result};
pub use scalar::Scalar;
