//! Random admissible specs and random elements for the identity suite.
//!
//! Differentials are built from disjoint `u → v` pairs, so `d² = 0` holds by
//! construction. Pairings and `Δ_co` are drawn from the solution space of the
//! symmetry and chain-map constraints, so every draw is admissible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Element, Factor, OcAlgebra};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::spaces::{
    AlgebraSpec, BasisSymbol, ClosedSector, CoFunctional, Differential, FormKind, GradedBasis, OpenSector, PairingForm,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomConfig {
    pub max_basis: usize,
    pub degree_min: i64,
    pub degree_max: i64,
    pub max_word: usize,
    pub max_factors: usize,
    pub max_terms: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            max_basis: 4,
            degree_min: -3,
            degree_max: 3,
            max_word: 4,
            max_factors: 3,
            max_terms: 2,
        }
    }
}

/// Deterministic per-trial seed derived from a master seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.gen()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_nonzero(rng: &mut ChaCha8Rng) -> Scalar {
    let v = *[-2i64, -1, 1, 2].choose(rng).expect("nonempty");
    Scalar::from_int(v)
}

fn random_basis(rng: &mut ChaCha8Rng, cfg: &RandomConfig, prefix: &str, window: &[i64]) -> GradedBasis {
    let n = rng.gen_range(1..=cfg.max_basis);
    let mut degs: Vec<i64> = Vec::with_capacity(n);
    for _ in 0..n {
        // Half the time pick a partner of an existing degree so pairings exist.
        let partner = !degs.is_empty() && rng.gen_bool(0.5);
        let d = if partner {
            let base = degs[rng.gen_range(0..degs.len())];
            let w = window[rng.gen_range(0..window.len())];
            (w - base).clamp(cfg.degree_min, cfg.degree_max)
        } else if rng.gen_bool(0.3) && !degs.is_empty() {
            // neighbour degree so the differential has room
            (degs[rng.gen_range(0..degs.len())] + 1).clamp(cfg.degree_min, cfg.degree_max)
        } else {
            rng.gen_range(cfg.degree_min..=cfg.degree_max)
        };
        degs.push(d);
    }
    let symbols = degs
        .into_iter()
        .enumerate()
        .map(|(i, degree)| BasisSymbol {
            name: format!("{prefix}{i}"),
            degree,
        })
        .collect();
    GradedBasis::new(symbols).expect("generated names are distinct")
}

fn random_differential(rng: &mut ChaCha8Rng, basis: &GradedBasis) -> Differential {
    let mut d = Differential::new();
    let mut used = vec![false; basis.len()];
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for u in 0..basis.len() {
        for v in 0..basis.len() {
            if basis.degree(v) == basis.degree(u) + 1 {
                candidates.push((u, v));
            }
        }
    }
    candidates.shuffle(rng);
    for (u, v) in candidates {
        if used[u] || used[v] || !rng.gen_bool(0.6) {
            continue;
        }
        used[u] = true;
        used[v] = true;
        d.set(u, v, small_nonzero(rng));
    }
    d
}

/// A random element of the space of forms satisfying symmetry, the degree
/// window and the chain-map condition.
fn random_form(rng: &mut ChaCha8Rng, kind: FormKind, basis: &GradedBasis, d: &Differential) -> PairingForm {
    let mut form = PairingForm::new(kind);
    let n = basis.len();
    let mut unknowns: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        for b in a..n {
            if basis.degree(a) + basis.degree(b) != form.window() {
                continue;
            }
            if a == b && form.symmetry().exponent(basis.degree(a), basis.degree(a)).rem_euclid(2) == 1 {
                continue;
            }
            unknowns.push((a, b));
        }
    }
    if unknowns.is_empty() {
        return form;
    }
    // Column k of the basis form for unknown k.
    let basis_forms: Vec<PairingForm> = unknowns
        .iter()
        .map(|&(a, b)| {
            let mut f = PairingForm::with_convention(kind, form.window(), form.symmetry());
            f.set(a, b, Scalar::one());
            f
        })
        .collect();
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let row: Vec<Scalar> = basis_forms
                .iter()
                .map(|f| {
                    let mut v: Scalar = d.image(a).map(|(t, c)| c * &f.value(basis, t, b)).sum();
                    let r: Scalar = d.image(b).map(|(t, c)| c * &f.value(basis, a, t)).sum();
                    v += r * Scalar::sign_power(basis.degree(a));
                    v
                })
                .collect();
            if row.iter().any(|v| !v.is_zero()) {
                rows.push(row);
            }
        }
    }
    let solutions = if rows.is_empty() {
        (0..unknowns.len())
            .map(|k| {
                let mut v = vec![Scalar::zero(); unknowns.len()];
                v[k] = Scalar::one();
                v
            })
            .collect()
    } else {
        let mut m = Matrix::zeros(rows.len(), unknowns.len());
        for (r, row) in rows.into_iter().enumerate() {
            for (c, v) in row.into_iter().enumerate() {
                m.set(r, c, v);
            }
        }
        m.nullspace()
    };
    let mut values = vec![Scalar::zero(); unknowns.len()];
    for sol in &solutions {
        let c = Scalar::from_int(rng.gen_range(-2..=2));
        for (v, s) in values.iter_mut().zip(sol) {
            *v += &c * s;
        }
    }
    for (&(a, b), v) in unknowns.iter().zip(values) {
        form.set(a, b, v);
    }
    form
}

fn random_co(rng: &mut ChaCha8Rng, basis: &GradedBasis, d: &Differential) -> CoFunctional {
    let mut co = CoFunctional::default();
    for x in 0..basis.len() {
        if basis.degree(x) != 0 || !rng.gen_bool(0.7) {
            continue;
        }
        // Δ_co must vanish on im d: skip targets of d.
        let hit = (0..basis.len()).any(|u| d.image(u).any(|(t, _)| t == x));
        if !hit {
            co.set(x, small_nonzero(rng));
        }
    }
    co
}

pub fn random_spec(rng: &mut ChaCha8Rng, cfg: &RandomConfig) -> AlgebraSpec {
    let cb = random_basis(rng, cfg, "x", &[-1]);
    let cd = random_differential(rng, &cb);
    let pairing = random_form(rng, FormKind::Closed, &cb, &cd);
    let delta_co = random_co(rng, &cb, &cd);
    let ob = random_basis(rng, cfg, "a", &[2, 0]);
    let od = random_differential(rng, &ob);
    let pairing_prime = random_form(rng, FormKind::OpenPrime, &ob, &od);
    let pairing_double = random_form(rng, FormKind::OpenDouble, &ob, &od);
    AlgebraSpec {
        closed: ClosedSector {
            basis: cb,
            d: cd,
            pairing,
        },
        open: OpenSector {
            basis: ob,
            d: od,
            pairing_prime,
            pairing_double,
        },
        delta_co,
    }
}

pub fn random_factors(rng: &mut ChaCha8Rng, alg: &OcAlgebra, cfg: &RandomConfig) -> Vec<Factor> {
    let nc = alg.spec().closed.basis.len();
    let no = alg.spec().open.basis.len();
    let k = rng.gen_range(0..=cfg.max_factors);
    (0..k)
        .map(|_| {
            if rng.gen_bool(0.4) {
                Factor::Closed(rng.gen_range(0..nc))
            } else {
                let len = rng.gen_range(0..=cfg.max_word);
                Factor::Cyclic((0..len).map(|_| rng.gen_range(0..no)).collect())
            }
        })
        .collect()
}

/// A random element; may be zero or inhomogeneous.
pub fn random_element(rng: &mut ChaCha8Rng, alg: &OcAlgebra, cfg: &RandomConfig) -> Element {
    let terms = rng.gen_range(1..=cfg.max_terms);
    let raw: Vec<_> = (0..terms)
        .map(|_| (small_nonzero(rng), random_factors(rng, alg, cfg)))
        .collect();
    alg.normalize(raw)
}

/// A random homogeneous element, nonzero whenever a nonzero monomial was
/// drawn within a bounded number of attempts.
pub fn random_homogeneous(rng: &mut ChaCha8Rng, alg: &OcAlgebra, cfg: &RandomConfig) -> Element {
    let mut first = alg.zero();
    for _ in 0..8 {
        first = alg.normalize([(small_nonzero(rng), random_factors(rng, alg, cfg))]);
        if !first.is_zero() {
            break;
        }
    }
    let Some(deg) = first.terms().keys().next().map(|m| alg.monomial_degree(m)) else {
        return first;
    };
    let mut out = first;
    for _ in 1..cfg.max_terms {
        for _ in 0..8 {
            let e = alg.normalize([(small_nonzero(rng), random_factors(rng, alg, cfg))]);
            if let Some(m) = e.terms().keys().next() {
                if alg.monomial_degree(m) == deg {
                    out = out.add(&e);
                    break;
                }
            }
        }
    }
    out
}
