//! Master equations on truncated series over the algebra.
//!
//! With `Δ = Δ_c + Δ_o + √ħ Δ_co`, the quantum master equation reads
//! `dS + ħΔS + ½{S, S} = 0`; the classical one drops the `ħΔ` term.
//! `ħ^k` sits at `√ħ` exponent `2k`, so `ħΔ_co` shifts keys by 3.

use serde::{Deserialize, Serialize};

use crate::algebra::{Element, ElementJson, Factor, OcAlgebra};
use crate::bv::BracketKind;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{series_exp, Bounds, Key, Series};

/// A degree-zero series `Σ S_{k,j} λ^k √ħ^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterSeries {
    pub series: Series<Element>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterTermJson {
    pub lambda: u32,
    pub sqrt_hbar: i32,
    pub element: ElementJson,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterSeriesJson {
    pub terms: Vec<MasterTermJson>,
}

impl MasterSeries {
    pub fn zero(bounds: Bounds) -> Self {
        MasterSeries {
            series: Series::zero(bounds),
        }
    }

    /// Checks that every coefficient is homogeneous of degree 0.
    pub fn new(alg: &OcAlgebra, series: Series<Element>) -> Result<Self> {
        for (k, v) in series.iter() {
            alg.check(v)?;
            if v.is_zero() {
                continue;
            }
            match alg.homogeneous_degree(v) {
                Ok(0) => {}
                Ok(d) => {
                    return Err(Error::Validation(format!(
                        "coefficient at \u{3bb}^{} \u{221a}\u{127}^{} has degree {d}, expected 0",
                        k.0, k.1
                    )))
                }
                Err(_) => {
                    return Err(Error::Validation(format!(
                        "coefficient at \u{3bb}^{} \u{221a}\u{127}^{} is not homogeneous",
                        k.0, k.1
                    )))
                }
            }
        }
        Ok(MasterSeries { series })
    }

    pub fn from_json(alg: &OcAlgebra, j: &MasterSeriesJson, bounds: Bounds) -> Result<Self> {
        let mut s = Series::zero(bounds);
        for t in &j.terms {
            let e = alg.element_from_json(&t.element)?;
            let key = (t.lambda, t.sqrt_hbar);
            if key.1 < bounds.half_hbar_min {
                return Err(Error::Validation(format!(
                    "term at \u{221a}\u{127}^{} lies below the lower bound {}",
                    key.1, bounds.half_hbar_min
                )));
            }
            if key.0 > bounds.lambda_max || key.1 > bounds.half_hbar_max {
                continue;
            }
            s.insert(key, e)?;
        }
        Self::new(alg, s)
    }

    pub fn from_str(alg: &OcAlgebra, text: &str, bounds: Bounds) -> Result<Self> {
        let j: MasterSeriesJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(alg, &j, bounds)
    }

    pub fn bounds(&self) -> Bounds {
        self.series.bounds()
    }
}

pub fn series_to_json(alg: &OcAlgebra, s: &Series<Element>) -> MasterSeriesJson {
    MasterSeriesJson {
        terms: s
            .iter()
            .map(|(k, v)| MasterTermJson {
                lambda: k.0,
                sqrt_hbar: k.1,
                element: alg.element_to_json(v),
            })
            .collect(),
    }
}

/// Applies a linear operator to every coefficient, shifting keys.
fn apply(s: &Series<Element>, shift: (u32, i32), f: impl Fn(&Element) -> Element) -> Series<Element> {
    s.map_linear(shift, f)
}

/// `½{S, S}` with the total bracket; coefficients have degree 0.
pub fn half_bracket(alg: &OcAlgebra, s: &Series<Element>) -> Result<Series<Element>> {
    let half = Scalar::ratio(1, 2);
    s.mul_with(s, |a, b| {
        alg.antibracket(a, b, BracketKind::Total)
            .expect("degree-zero coefficients")
            .scale(&half)
    })
}

/// `dS + ħ(Δ_c + Δ_o)S + ħ^{3/2}Δ_co S + ½{S, S}`.
pub fn qme_residual(alg: &OcAlgebra, s: &MasterSeries) -> Result<Series<Element>> {
    let sr = &s.series;
    let mut out = apply(sr, (0, 0), |e| alg.differential(e));
    out = out.add(&apply(sr, (0, 2), |e| alg.delta_second_order(e)).retruncate(sr.bounds()))?;
    out = out.add(&apply(sr, (0, 3), |e| alg.delta_co_op(e)).retruncate(sr.bounds()))?;
    out = out.add(&half_bracket(alg, sr)?)?;
    Ok(out)
}

/// `dS + ½{S, S}`.
pub fn cme_residual(alg: &OcAlgebra, s: &MasterSeries) -> Result<Series<Element>> {
    let sr = &s.series;
    apply(sr, (0, 0), |e| alg.differential(e)).add(&half_bracket(alg, sr)?)
}

/// Lowest nonvanishing key of a residual, for reports.
pub fn lowest_defect(s: &Series<Element>) -> Option<(Key, &Element)> {
    s.iter().find(|(_, v)| !v.is_zero()).map(|(k, v)| (*k, v))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpQmeReport {
    /// `dS + ħΔS + ½{S,S}` vanishes up to `λ_max`.
    pub qme_zero: bool,
    /// `(d + ħΔ) e^{S/ħ}` vanishes up to `λ_max`.
    pub exp_zero: bool,
    /// `(d + ħΔ) e^{S/ħ} = ħ^{−1} (dS + ħΔS + ½{S,S}) e^{S/ħ}` holds exactly.
    pub identity_holds: bool,
    /// `√ħ` upper bound used so that nothing below `λ_max` is truncated.
    pub working_half_hbar_max: i32,
}

impl ExpQmeReport {
    pub fn agree(&self) -> bool {
        self.qme_zero == self.exp_zero
    }
}

/// Evaluates the exponential form of the quantum master equation.
///
/// The `√ħ` upper bound is raised so that no term of `λ`-order at most
/// `λ_max` is lost, which makes the comparison with [`qme_residual`] exact.
pub fn exp_qme_check(alg: &OcAlgebra, s: &MasterSeries) -> Result<ExpQmeReport> {
    let b = s.bounds();
    let top = s.series.keys().map(|k| k.1).max().unwrap_or(0).max(0);
    let working = b.half_hbar_max.max((b.lambda_max as i32 + 2) * top + 4);
    let wb = Bounds::new(b.lambda_max, b.half_hbar_min, working)?;
    let sw = MasterSeries {
        series: s.series.retruncate(wb),
    };
    let e = series_exp(&sw.series, wb, true, alg.one(), |x, y| alg.mul(x, y))?;
    let eb = e.bounds();
    let lhs = apply(&e, (0, 0), |x| alg.differential(x))
        .add(&apply(&e, (0, 2), |x| alg.delta_second_order(x)).retruncate(eb))?
        .add(&apply(&e, (0, 3), |x| alg.delta_co_op(x)).retruncate(eb))?;
    let r = qme_residual(alg, &sw)?;
    let rhs = apply(&r, (0, -2), |x| x.clone())
        .retruncate(eb)
        .mul_with(&e, |x, y| alg.mul(x, y))?;
    Ok(ExpQmeReport {
        qme_zero: r.is_zero(),
        exp_zero: lhs.is_zero(),
        identity_holds: lhs.sub(&rhs)?.is_zero(),
        working_half_hbar_max: working,
    })
}

/// `d a + {S_c, a}_c` for a closed-sector `S_c` of degree 0.
pub fn twisted_differential(alg: &OcAlgebra, s_c: &Element, a: &Element) -> Result<Element> {
    alg.check(s_c)?;
    alg.check(a)?;
    if s_c
        .terms()
        .keys()
        .any(|m| m.factors().iter().any(|f| matches!(f, Factor::Cyclic(_))))
    {
        return Err(Error::Validation("S_c must lie in the closed sector".into()));
    }
    if !s_c.is_zero() && alg.homogeneous_degree(s_c)? != 0 {
        return Err(Error::Validation("S_c must have degree 0".into()));
    }
    let br = alg.bracket_from(s_c, a, 0, |x| alg.delta_c(x))?;
    Ok(alg.differential(a).add(&br))
}
