//! The Koszul sign engine.
//!
//! Every sign in the crate is produced here: operators describe what they do
//! as "permute graded symbols into a staging arrangement, then act", and the
//! permutation sign comes from [`koszul_odd`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A permutation of graded items together with the degree of each item.
///
/// `order[k]` is the input position of the item that ends up at output
/// position `k`; `degrees[i]` is the degree of the item at input position `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPermutation {
    order: Vec<usize>,
    degrees: Vec<i64>,
}

impl SignedPermutation {
    pub fn new(order: Vec<usize>, degrees: Vec<i64>) -> Result<Self> {
        if order.len() != degrees.len() {
            return Err(Error::Validation(format!(
                "permutation has {} entries but {} degrees",
                order.len(),
                degrees.len()
            )));
        }
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() {
                return Err(Error::Validation(format!("index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Validation(format!("repeated index {i}")));
            }
        }
        Ok(SignedPermutation { order, degrees })
    }

    pub fn identity(degrees: Vec<i64>) -> Self {
        SignedPermutation {
            order: (0..degrees.len()).collect(),
            degrees,
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `self` followed by `next`, where `next` permutes the output of `self`.
    /// The degrees of `next` must be the degrees of `self`'s output.
    pub fn then(&self, next: &SignedPermutation) -> Result<SignedPermutation> {
        if next.len() != self.len() {
            return Err(Error::Validation("composing permutations of different length".into()));
        }
        let out_deg: Vec<i64> = self.order.iter().map(|&i| self.degrees[i]).collect();
        if out_deg.iter().zip(&next.degrees).any(|(a, b)| (a - b).rem_euclid(2) != 0) {
            return Err(Error::Validation("degree assignments do not match".into()));
        }
        let order = next.order.iter().map(|&k| self.order[k]).collect();
        SignedPermutation::new(order, self.degrees.clone())
    }

    pub fn koszul_sign(&self) -> Scalar {
        let odd = koszul_odd(&self.order, |i| self.degrees[i].rem_euclid(2) == 1);
        if odd {
            -Scalar::one()
        } else {
            Scalar::one()
        }
    }
}

/// Koszul sign of a validated permutation; see [`SignedPermutation`].
pub fn koszul_sign(perm: &SignedPermutation) -> Scalar {
    perm.koszul_sign()
}

/// Parity of the Koszul sign: true when the sign is `-1`.
///
/// Counts pairs of odd items whose relative order is reversed. `order` must be
/// a permutation of `0..order.len()`; this is not rechecked.
pub fn koszul_odd(order: &[usize], odd: impl Fn(usize) -> bool) -> bool {
    let mut parity = false;
    for (k, &i) in order.iter().enumerate() {
        if !odd(i) {
            continue;
        }
        for &j in &order[k + 1..] {
            if j < i && odd(j) {
                parity = !parity;
            }
        }
    }
    parity
}

/// Parity of moving a block of total degree `a` past a block of total degree `b`.
#[inline]
pub fn block_swap_odd(a: i64, b: i64) -> bool {
    (a * b).rem_euclid(2) == 1
}
