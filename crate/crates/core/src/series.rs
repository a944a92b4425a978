//! Truncated bivariate series in the string coupling `λ` and `√ħ`.
//!
//! Keys are `(λ exponent, √ħ exponent)`; `ħ^k` is stored at `√ħ` exponent
//! `2k`. Both variables have degree zero, so multiplication carries no
//! Koszul signs. Upper bounds truncate (those keys are dropped); the lower
//! `√ħ` bound is descriptive and widens when a product needs it.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Values a series can carry.
pub trait Coefficient: Clone + PartialEq + Debug {
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn scale(&self, s: &Scalar) -> Self;
}

impl Coefficient for Scalar {
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn scale(&self, s: &Scalar) -> Self {
        self * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub lambda_max: u32,
    pub half_hbar_min: i32,
    pub half_hbar_max: i32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            lambda_max: 6,
            half_hbar_min: -6,
            half_hbar_max: 6,
        }
    }
}

impl Bounds {
    pub fn new(lambda_max: u32, half_hbar_min: i32, half_hbar_max: i32) -> Result<Self> {
        if half_hbar_min > half_hbar_max {
            return Err(Error::Validation(format!(
                "empty \u{221a}\u{127} range [{half_hbar_min}, {half_hbar_max}]"
            )));
        }
        Ok(Bounds {
            lambda_max,
            half_hbar_min,
            half_hbar_max,
        })
    }

    fn keeps(&self, key: Key) -> bool {
        key.0 <= self.lambda_max && key.1 <= self.half_hbar_max
    }

    fn check_compatible(&self, other: &Bounds) -> Result<()> {
        if self.lambda_max != other.lambda_max || self.half_hbar_max != other.half_hbar_max {
            return Err(Error::Validation(format!(
                "incompatible truncation bounds {self:?} and {other:?}"
            )));
        }
        Ok(())
    }
}

/// `(λ exponent, √ħ exponent)`.
pub type Key = (u32, i32);

#[derive(Debug, Clone, PartialEq)]
pub struct Series<C> {
    terms: BTreeMap<Key, C>,
    bounds: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Add,
    Multiply,
}

impl<C: Coefficient> Series<C> {
    pub fn zero(bounds: Bounds) -> Self {
        Series {
            terms: BTreeMap::new(),
            bounds,
        }
    }

    /// A single term; dropped if it lies above the truncation bounds.
    pub fn monomial(bounds: Bounds, key: Key, value: C) -> Result<Self> {
        let mut s = Self::zero(bounds);
        s.insert(key, value)?;
        Ok(s)
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, key: Key) -> Option<&C> {
        self.terms.get(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &C)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &Key> {
        self.terms.keys()
    }

    /// Lowest key in (λ, √ħ) lexicographic order.
    pub fn lowest(&self) -> Option<(&Key, &C)> {
        self.terms.iter().next()
    }

    pub fn lambda_order(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0).min()
    }

    /// Adds `value` at `key`. Keys above the bounds are truncated away; a key
    /// below the lower `√ħ` bound is an error.
    pub fn insert(&mut self, key: Key, value: C) -> Result<()> {
        if key.1 < self.bounds.half_hbar_min {
            return Err(Error::Validation(format!(
                "key {key:?} lies below \u{221a}\u{127} bound {}",
                self.bounds.half_hbar_min
            )));
        }
        self.accumulate(key, value);
        Ok(())
    }

    fn accumulate(&mut self, key: Key, value: C) {
        if !self.bounds.keeps(key) || value.is_zero() {
            return;
        }
        match self.terms.remove(&key) {
            Some(old) => {
                let sum = old.add(&value);
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
            None => {
                self.terms.insert(key, value);
            }
        }
    }

    pub fn add(&self, other: &Series<C>) -> Result<Series<C>> {
        self.bounds.check_compatible(&other.bounds)?;
        let mut out = self.clone();
        out.bounds.half_hbar_min = self.bounds.half_hbar_min.min(other.bounds.half_hbar_min);
        for (k, v) in &other.terms {
            out.accumulate(*k, v.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Scalar) -> Series<C> {
        let mut out = Series::zero(self.bounds);
        for (k, v) in &self.terms {
            out.accumulate(*k, v.scale(s));
        }
        out
    }

    pub fn sub(&self, other: &Series<C>) -> Result<Series<C>> {
        self.add(&other.scale(&-Scalar::one()))
    }

    /// Cauchy product with a caller-supplied coefficient multiplication.
    pub fn mul_with(&self, other: &Series<C>, mul: impl Fn(&C, &C) -> C) -> Result<Series<C>> {
        self.bounds.check_compatible(&other.bounds)?;
        let mut lo = self.bounds.half_hbar_min.min(other.bounds.half_hbar_min);
        if let (Some(ka), Some(kb)) = (self.lowest_half(), other.lowest_half()) {
            lo = lo.min(ka + kb);
        }
        let mut out = Series::zero(Bounds {
            half_hbar_min: lo,
            ..self.bounds
        });
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                let key = (ka.0 + kb.0, ka.1 + kb.1);
                if out.bounds.keeps(key) {
                    out.accumulate(key, mul(a, b));
                }
            }
        }
        Ok(out)
    }

    fn lowest_half(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.1).min()
    }

    /// Applies a linear map to every coefficient, shifting keys by `shift`.
    pub fn map_linear(&self, shift: (u32, i32), f: impl Fn(&C) -> C) -> Series<C> {
        let mut bounds = self.bounds;
        if let Some(h) = self.lowest_half() {
            bounds.half_hbar_min = bounds.half_hbar_min.min(h + shift.1);
        }
        let mut out = Series::zero(bounds);
        for (k, v) in &self.terms {
            out.accumulate((k.0 + shift.0, k.1 + shift.1), f(v));
        }
        out
    }

    /// Same terms under different bounds: drops keys above the new upper
    /// bounds and widens the lower bound if needed.
    pub fn retruncate(&self, bounds: Bounds) -> Series<C> {
        let mut b = bounds;
        if let Some(lo) = self.terms.keys().map(|k| k.1).min() {
            b.half_hbar_min = b.half_hbar_min.min(lo);
        }
        let mut out = Series::zero(b);
        for (k, v) in &self.terms {
            out.accumulate(*k, v.clone());
        }
        out
    }

    pub fn into_terms(self) -> BTreeMap<Key, C> {
        self.terms
    }
}

impl Series<Scalar> {
    pub fn combine(&self, other: &Series<Scalar>, mode: CombineMode) -> Result<Series<Scalar>> {
        match mode {
            CombineMode::Add => self.add(other),
            CombineMode::Multiply => self.mul_with(other, |a, b| a * b),
        }
    }
}

/// Element-wise combination with an explicit coefficient product.
pub fn series_combine<C: Coefficient>(
    a: &Series<C>,
    b: &Series<C>,
    mode: CombineMode,
    mul: impl Fn(&C, &C) -> C,
) -> Result<Series<C>> {
    match mode {
        CombineMode::Add => a.add(b),
        CombineMode::Multiply => a.mul_with(b, mul),
    }
}

/// Truncated exponential `1 + s + s²/2! + …`, optionally of `s/ħ`.
///
/// Every term of `s` must carry at least one power of `λ`. When dividing by
/// `ħ`, the lower `√ħ` bound of the result is widened to the lowest key the
/// expansion can reach.
pub fn series_exp<C: Coefficient>(
    s: &Series<C>,
    bounds: Bounds,
    divide_by_hbar: bool,
    one: C,
    mul: impl Fn(&C, &C) -> C,
) -> Result<Series<C>> {
    if let Some((k, _)) = s.terms.iter().find(|(k, _)| k.0 == 0) {
        return Err(Error::Convergence(format!("term at key {k:?} has no power of \u{3bb}")));
    }
    let shift = if divide_by_hbar { -2 } else { 0 };
    let max_power = bounds.lambda_max as i32;
    let lowest = s.terms.keys().map(|k| k.1 + shift).min().unwrap_or(0);
    let reach = (0..=max_power).map(|p| p * lowest).min().unwrap_or(0);
    let bounds = Bounds {
        half_hbar_min: bounds.half_hbar_min.min(reach).min(lowest),
        ..bounds
    };

    let mut base = Series::zero(bounds);
    for (k, v) in &s.terms {
        base.accumulate((k.0, k.1 + shift), v.clone());
    }

    let mut out = Series::monomial(bounds, (0, 0), one)?;
    let mut power = base.clone();
    let mut factorial = Scalar::one();
    for n in 1..=bounds.lambda_max {
        if power.is_zero() {
            break;
        }
        factorial *= Scalar::from_int(n as i64);
        let inv = factorial.recip().expect("factorial is nonzero");
        out = out.add(&power.scale(&inv))?;
        power = power.mul_with(&base, &mul)?;
    }
    Ok(out)
}

/// Wire form of one series term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm<V> {
    pub lambda: u32,
    pub sqrt_hbar: i32,
    pub value: V,
}

impl<C: Coefficient> Series<C> {
    pub fn to_terms<V>(&self, f: impl Fn(&C) -> V) -> Vec<SeriesTerm<V>> {
        self.terms
            .iter()
            .map(|(k, v)| SeriesTerm {
                lambda: k.0,
                sqrt_hbar: k.1,
                value: f(v),
            })
            .collect()
    }
}
