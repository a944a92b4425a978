//! Combinatorics of open-closed surface types: Euler characteristic,
//! stability, dimension, solution weights, the codimension-one boundary
//! expansion with its exponent bookkeeping, and the sign representation of
//! the relabeling group.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sign::koszul_odd;

/// A type `(g, b, n, m)`: genus, boundary components, interior punctures and
/// the total number of boundary punctures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SurfaceType {
    pub g: u32,
    pub b: u32,
    pub n: u32,
    pub m: u32,
}

impl fmt::Display for SurfaceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.g, self.b, self.n, self.m)
    }
}

impl SurfaceType {
    pub fn new(g: u32, b: u32, n: u32, m: u32) -> Result<Self> {
        let t = SurfaceType { g, b, n, m };
        t.check()?;
        Ok(t)
    }

    pub fn is_valid(&self) -> bool {
        self.b > 0 || self.m == 0
    }

    pub fn check(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(format!("type {self}: boundary punctures without boundary")))
        }
    }

    fn checked(g: i64, b: i64, n: i64, m: i64) -> Option<Self> {
        let conv = |v: i64| u32::try_from(v).ok();
        let t = SurfaceType {
            g: conv(g)?,
            b: conv(b)?,
            n: conv(n)?,
            m: conv(m)?,
        };
        (t.is_valid() && t.chi_twice() < 0).then_some(t)
    }

    /// `2χ = 4 − 4g − 2b − 2n − m`.
    fn chi_twice(&self) -> i64 {
        4 - 4 * i64::from(self.g) - 2 * i64::from(self.b) - 2 * i64::from(self.n) - i64::from(self.m)
    }

    /// `2p = 2 − m − n`.
    fn p_twice(&self) -> i64 {
        2 - i64::from(self.m) - i64::from(self.n)
    }
}

/// `χ = 2 − 2g − b − n − m/2`.
pub fn euler_char(t: SurfaceType) -> Result<Scalar> {
    t.check()?;
    Ok(Scalar::ratio(t.chi_twice(), 2))
}

/// `p = 1 − (m + n)/2`.
pub fn p_value(t: SurfaceType) -> Result<Scalar> {
    t.check()?;
    Ok(Scalar::ratio(t.p_twice(), 2))
}

pub fn is_stable(t: SurfaceType) -> Result<bool> {
    t.check()?;
    Ok(t.chi_twice() < 0)
}

/// Membership in the list of unstable types, read literally.
pub fn in_excluded_list(t: SurfaceType) -> bool {
    let SurfaceType { g, b, n, m } = t;
    (g == 0 && b == 0 && n <= 2)
        || (g == 1 && b == 0 && n == 0)
        || (g == 0 && b == 1 && ((n <= 1 && m == 0) || (n == 0 && m <= 2)))
        || (g == 0 && b == 2 && m == 0 && n == 0)
}

fn require_stable(t: SurfaceType) -> Result<()> {
    if is_stable(t)? {
        Ok(())
    } else {
        Err(Error::Domain(format!("type {t} is not stable")))
    }
}

/// `6g − 6 + 2n + 3b + m`.
pub fn dimension(t: SurfaceType) -> Result<i64> {
    require_stable(t)?;
    Ok(6 * i64::from(t.g) - 6 + 2 * i64::from(t.n) + 3 * i64::from(t.b) + i64::from(t.m))
}

/// Exponents of `λ^{−2χ} ħ^{p−χ}`; the `ħ` exponent is given in `√ħ` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weights {
    pub lambda_exp: i64,
    pub half_hbar_exp: i64,
}

pub fn weights(t: SurfaceType) -> Result<Weights> {
    require_stable(t)?;
    Ok(Weights {
        lambda_exp: -t.chi_twice(),
        half_hbar_exp: t.p_twice() - t.chi_twice(),
    })
}

/// All stable types of dimension at most `dim_max`.
pub fn stable_types_up_to(dim_max: i64) -> Vec<SurfaceType> {
    let mut out = Vec::new();
    let bound = |coef: i64| ((dim_max + 6) / coef).max(0) as u32;
    for g in 0..=bound(6) {
        for b in 0..=bound(3) {
            for n in 0..=bound(2) {
                for m in 0..=bound(1) {
                    let t = SurfaceType { g, b, n, m };
                    if t.is_valid() && t.chi_twice() < 0 && dimension(t).is_ok_and(|d| d <= dim_max) {
                        out.push(t);
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Boundary expansion

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryKind {
    DeltaC,
    DeltaOPrime,
    DeltaODouble,
    DeltaCo,
    SplitC,
    SplitO,
}

impl BoundaryKind {
    pub fn is_split(self) -> bool {
        matches!(self, BoundaryKind::SplitC | BoundaryKind::SplitO)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryTerm {
    pub kind: BoundaryKind,
    pub args: Vec<SurfaceType>,
    pub coeff: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryExpansion {
    pub input: SurfaceType,
    pub terms: Vec<BoundaryTerm>,
}

/// The terms of `dS_{g,b}^{n,m}`: unary kinds with coefficient −1, splits as
/// ordered pairs with −½ each.
pub fn boundary_expansion(t: SurfaceType) -> Result<BoundaryExpansion> {
    require_stable(t)?;
    let (g, b, n, m) = (i64::from(t.g), i64::from(t.b), i64::from(t.n), i64::from(t.m));
    let mut terms = Vec::new();
    let mut unary = |kind, ok: bool, arg: Option<SurfaceType>| {
        if let (true, Some(a)) = (ok, arg) {
            terms.push(BoundaryTerm {
                kind,
                args: vec![a],
                coeff: -Scalar::one(),
            });
        }
    };
    unary(BoundaryKind::DeltaC, g >= 1, SurfaceType::checked(g - 1, b, n + 2, m));
    unary(BoundaryKind::DeltaOPrime, b >= 2, SurfaceType::checked(g, b - 1, n, m + 2));
    unary(BoundaryKind::DeltaODouble, g >= 1 && b >= 1, SurfaceType::checked(g - 1, b + 1, n, m + 2));
    unary(BoundaryKind::DeltaCo, b >= 1, SurfaceType::checked(g, b - 1, n + 1, m));
    let half = -Scalar::ratio(1, 2);
    // closed gluing: g1+g2 = g, b1+b2 = b, n1+n2 = n+2, m1+m2 = m, n_i ≥ 1
    for g1 in 0..=g {
        for b1 in 0..=b {
            for n1 in 1..=n + 1 {
                for m1 in 0..=m {
                    let l = SurfaceType::checked(g1, b1, n1, m1);
                    let r = SurfaceType::checked(g - g1, b - b1, n + 2 - n1, m - m1);
                    if let (Some(l), Some(r)) = (l, r) {
                        terms.push(BoundaryTerm {
                            kind: BoundaryKind::SplitC,
                            args: vec![l, r],
                            coeff: half.clone(),
                        });
                    }
                }
            }
        }
    }
    // open gluing: g1+g2 = g, b1+b2 = b+1, n1+n2 = n, m1+m2 = m+2, b_i, m_i ≥ 1
    for g1 in 0..=g {
        for b1 in 1..=b {
            for n1 in 0..=n {
                for m1 in 1..=m + 1 {
                    let l = SurfaceType::checked(g1, b1, n1, m1);
                    let r = SurfaceType::checked(g - g1, b + 1 - b1, n - n1, m + 2 - m1);
                    if let (Some(l), Some(r)) = (l, r) {
                        terms.push(BoundaryTerm {
                            kind: BoundaryKind::SplitO,
                            args: vec![l, r],
                            coeff: half.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(BoundaryExpansion { input: t, terms })
}

/// Display view: ordered split pairs merged into unordered ones with summed
/// coefficients.
pub fn unordered_view(e: &BoundaryExpansion) -> Vec<BoundaryTerm> {
    let mut out: Vec<BoundaryTerm> = Vec::new();
    for t in &e.terms {
        let mut args = t.args.clone();
        if t.kind.is_split() {
            args.sort();
        }
        match out.iter_mut().find(|o| o.kind == t.kind && o.args == args) {
            Some(o) => o.coeff = &o.coeff + &t.coeff,
            None => out.push(BoundaryTerm {
                kind: t.kind,
                args,
                coeff: t.coeff.clone(),
            }),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Bookkeeping

/// Operator weights in the modified quantum master equation, in `√ħ` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorWeights {
    pub delta: i64,
    pub delta_co: i64,
    pub bracket: i64,
}

impl Default for OperatorWeights {
    /// `ħ` for `Δ_c`, `Δ_o`; `ħ^{3/2}` for `Δ_co`; `1` for brackets.
    fn default() -> Self {
        OperatorWeights {
            delta: 2,
            delta_co: 3,
            bracket: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookkeepingViolation {
    pub kind: BoundaryKind,
    pub args: Vec<SurfaceType>,
    pub relation: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookkeepingReport {
    pub input: SurfaceType,
    pub operator_weights: OperatorWeights,
    pub terms: usize,
    pub violations: Vec<BookkeepingViolation>,
}

impl BookkeepingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks χ preservation, the p-relations and weight consistency on every
/// boundary term of `t`.
pub fn bookkeeping_check(t: SurfaceType, ow: OperatorWeights) -> Result<BookkeepingReport> {
    let exp = boundary_expansion(t)?;
    let w = weights(t)?;
    let mut violations = Vec::new();
    let half = |v: i64| Scalar::ratio(v, 2).to_string();
    for term in &exp.terms {
        let mut flag = |relation: &str, expected: String, found: String| {
            if expected != found {
                violations.push(BookkeepingViolation {
                    kind: term.kind,
                    args: term.args.clone(),
                    relation: relation.into(),
                    expected,
                    found,
                });
            }
        };
        let chi: i64 = term.args.iter().map(|a| a.chi_twice()).sum();
        flag("chi", half(t.chi_twice()), half(chi));
        let p: i64 = term.args.iter().map(|a| a.p_twice()).sum();
        let shift = match term.kind {
            BoundaryKind::DeltaC | BoundaryKind::DeltaOPrime | BoundaryKind::DeltaODouble => 2,
            BoundaryKind::DeltaCo => 1,
            BoundaryKind::SplitC | BoundaryKind::SplitO => 0,
        };
        flag("p", half(t.p_twice()), half(p + shift));
        let op = match term.kind {
            BoundaryKind::DeltaC | BoundaryKind::DeltaOPrime | BoundaryKind::DeltaODouble => ow.delta,
            BoundaryKind::DeltaCo => ow.delta_co,
            BoundaryKind::SplitC | BoundaryKind::SplitO => ow.bracket,
        };
        let mut lam = 0;
        let mut hb = op;
        for a in &term.args {
            let aw = weights(*a)?;
            lam += aw.lambda_exp;
            hb += aw.half_hbar_exp;
        }
        flag("lambda_weight", w.lambda_exp.to_string(), lam.to_string());
        flag("hbar_weight", half(w.half_hbar_exp), half(hb));
    }
    Ok(BookkeepingReport {
        input: t,
        operator_weights: ow,
        terms: exp.terms.len(),
        violations,
    })
}

// ---------------------------------------------------------------------------
// Relabelings and ρ

/// An element of `(Π Z_{m_i} ⋊ S_b) × S_n`: rotate boundary `i` by
/// `offsets[i]`, then place old boundary `boundary[k]` at position `k`;
/// interior punctures likewise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeling {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    pub offsets: Vec<u32>,
    pub profile: Vec<u32>,
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
}

impl Relabeling {
    pub fn new(interior: Vec<usize>, boundary: Vec<usize>, offsets: Vec<u32>, profile: Vec<u32>) -> Result<Self> {
        if !is_permutation(&interior) || !is_permutation(&boundary) {
            return Err(Error::Validation("relabeling needs permutations".into()));
        }
        if offsets.len() != profile.len() || boundary.len() != profile.len() {
            return Err(Error::Validation(format!(
                "{} offsets and {} boundary labels for a profile of {} boundaries",
                offsets.len(),
                boundary.len(),
                profile.len()
            )));
        }
        let offsets = offsets
            .iter()
            .zip(&profile)
            .map(|(&r, &m)| if m == 0 { 0 } else { r % m })
            .collect();
        Ok(Relabeling {
            interior,
            boundary,
            offsets,
            profile,
        })
    }

    pub fn identity(n: usize, profile: Vec<u32>) -> Self {
        let b = profile.len();
        Relabeling {
            interior: (0..n).collect(),
            boundary: (0..b).collect(),
            offsets: vec![0; b],
            profile,
        }
    }

    /// Profile after the relabeling.
    pub fn target_profile(&self) -> Vec<u32> {
        self.boundary.iter().map(|&i| self.profile[i]).collect()
    }

    /// `self` followed by `next`; `next` must act on the target profile.
    pub fn then(&self, next: &Relabeling) -> Result<Relabeling> {
        if next.profile != self.target_profile() || next.interior.len() != self.interior.len() {
            return Err(Error::Validation("relabelings do not compose: profile mismatch".into()));
        }
        let mut pos = vec![0; self.boundary.len()];
        for (k, &i) in self.boundary.iter().enumerate() {
            pos[i] = k;
        }
        let offsets = (0..self.profile.len()).map(|i| self.offsets[i] + next.offsets[pos[i]]).collect();
        Relabeling::new(
            next.interior.iter().map(|&k| self.interior[k]).collect(),
            next.boundary.iter().map(|&k| self.boundary[k]).collect(),
            offsets,
            self.profile.clone(),
        )
    }
}

/// `ρ`: `(−1)^{r_i(m_i−1)}` per cyclic offset times the Koszul sign of the
/// boundary permutation with boundary `i` of parity `m_i − 1`; trivial on
/// interior permutations.
pub fn rho_sign(r: &Relabeling) -> Result<Scalar> {
    let r = Relabeling::new(r.interior.clone(), r.boundary.clone(), r.offsets.clone(), r.profile.clone())?;
    let parity = |i: usize| (i64::from(r.profile[i]) - 1).rem_euclid(2) == 1;
    let mut flip = koszul_odd(&r.boundary, parity);
    for (i, &o) in r.offsets.iter().enumerate() {
        flip ^= o % 2 == 1 && parity(i);
    }
    Ok(Scalar::one().negate_if(flip))
}
