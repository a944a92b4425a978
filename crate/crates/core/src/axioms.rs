//! The randomized BV identity suite.
//!
//! Every trial draws an admissible spec and a few homogeneous elements from a
//! per-trial seed, then checks each identity exactly. A failure carries
//! everything needed to replay it.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Element, ElementJson, Factor, OcAlgebra};
use crate::bv::BracketKind;
use crate::random::{random_homogeneous, random_spec, rng, trial_seed, RandomConfig};
use crate::scalar::Scalar;
use crate::spaces::AlgebraSpecJson;

/// Names of all identities checked per trial, in evaluation order.
pub const IDENTITIES: &[&str] = &[
    "delta_unit",
    "degree_delta_c",
    "degree_delta_o_prime",
    "degree_delta_o_double",
    "degree_delta_co",
    "delta_c_squared",
    "delta_o_prime_squared",
    "delta_o_double_squared",
    "commutator_delta_o_prime_delta_o_double",
    "delta_o_squared",
    "delta_co_squared",
    "commutator_delta_c_d",
    "commutator_delta_o_d",
    "commutator_delta_co_d",
    "commutator_delta_c_delta_o",
    "commutator_delta_c_delta_co",
    "commutator_delta_o_delta_co",
    "leibniz_c",
    "leibniz_o",
    "delta_co_derivation",
    "prime_bracket_vanishes",
    "delta_co_leaves_bracket",
    "antisymmetry",
    "jacobi",
    "d_derivation_of_bracket",
    "delta_derivation_of_bracket",
    "representative_independence",
    "direct_obracket_agrees",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproducer {
    pub trial: u64,
    pub seed: u64,
    pub identity: String,
    pub spec: AlgebraSpecJson,
    pub elements: Vec<ElementJson>,
    pub residual: ElementJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    pub checked: usize,
    pub failures: Vec<Reproducer>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityTally {
    pub checked: u64,
    pub failed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub master_seed: u64,
    pub trials: u64,
    pub checks: usize,
    pub failed_trials: u64,
    pub identities: BTreeMap<String, IdentityTally>,
    /// The first failing trial of each failing identity.
    pub reproducers: Vec<Reproducer>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.reproducers.is_empty()
    }

    pub fn failing_identities(&self) -> Vec<&str> {
        self.identities
            .iter()
            .filter(|(_, t)| t.failed > 0)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// The elements a trial works with.
pub struct Sample {
    pub a: Element,
    pub b: Element,
    pub c: Element,
    pub word: Vec<usize>,
    pub rotation: usize,
}

fn deg(alg: &OcAlgebra, x: &Element) -> i64 {
    alg.homogeneous_degree(x).expect("sample elements are homogeneous")
}

fn sgn(e: i64) -> Scalar {
    Scalar::sign_power(e)
}

/// Checks that an operator raises the degree of every monomial by one.
fn degree_defect(alg: &OcAlgebra, x: &Element, op: impl Fn(&Element) -> Element) -> Element {
    let mut bad = alg.zero();
    for (m, c) in x.terms() {
        let single = alg.monomial_element(m.clone(), c.clone());
        let out = op(&single);
        let d0 = alg.monomial_degree(m);
        for (mm, cc) in out.terms() {
            if alg.monomial_degree(mm) != d0 + 1 {
                bad.add_term(mm.clone(), cc.clone());
            }
        }
    }
    bad
}

/// Evaluates one identity; the returned element is zero when it holds.
pub fn residual(alg: &OcAlgebra, name: &str, s: &Sample) -> Element {
    let (a, b, c) = (&s.a, &s.b, &s.c);
    let dc = |x: &Element| alg.delta_c(x);
    let dop = |x: &Element| alg.delta_o_prime(x);
    let dod = |x: &Element| alg.delta_o_double(x);
    let dout = |x: &Element| alg.delta_o(x);
    let dco = |x: &Element| alg.delta_co_op(x);
    let d = |x: &Element| alg.differential(x);
    let delta = |x: &Element| alg.delta_unweighted(x);
    let anticomm = |p: &dyn Fn(&Element) -> Element, q: &dyn Fn(&Element) -> Element, x: &Element| {
        p(&q(x)).add(&q(&p(x)))
    };
    let br = |x: &Element, y: &Element, k: BracketKind| alg.antibracket(x, y, k).expect("homogeneous sample");
    let (da, db) = (deg(alg, a), deg(alg, b));
    match name {
        "delta_unit" => delta(&alg.one()),
        "degree_delta_c" => degree_defect(alg, a, dc),
        "degree_delta_o_prime" => degree_defect(alg, a, dop),
        "degree_delta_o_double" => degree_defect(alg, a, dod),
        "degree_delta_co" => degree_defect(alg, a, dco),
        "delta_c_squared" => dc(&dc(a)),
        "delta_o_prime_squared" => dop(&dop(a)),
        "delta_o_double_squared" => dod(&dod(a)),
        "commutator_delta_o_prime_delta_o_double" => anticomm(&dop, &dod, a),
        "delta_o_squared" => dout(&dout(a)),
        "delta_co_squared" => dco(&dco(a)),
        "commutator_delta_c_d" => anticomm(&dc, &d, a),
        "commutator_delta_o_d" => anticomm(&dout, &d, a),
        "commutator_delta_co_d" => anticomm(&dco, &d, a),
        "commutator_delta_c_delta_o" => anticomm(&dc, &dout, a),
        "commutator_delta_c_delta_co" => anticomm(&dc, &dco, a),
        "commutator_delta_o_delta_co" => anticomm(&dout, &dco, a),
        "leibniz_c" | "leibniz_o" => {
            let k = if name == "leibniz_c" { BracketKind::Closed } else { BracketKind::Open };
            let lhs = br(a, &alg.mul(b, c), k);
            let r1 = alg.mul(&br(a, b, k), c);
            let r2 = alg.mul(b, &br(a, c, k)).scale(&sgn((da + 1) * db));
            lhs.sub(&r1).sub(&r2)
        }
        "delta_co_derivation" => {
            let lhs = dco(&alg.mul(a, b));
            lhs.sub(&alg.mul(&dco(a), b)).sub(&alg.mul(a, &dco(b)).scale(&sgn(da)))
        }
        "prime_bracket_vanishes" => alg.bracket_from(a, b, da, dop).expect("homogeneous"),
        "delta_co_leaves_bracket" => {
            let total = br(a, b, BracketKind::Total);
            let plain = alg
                .bracket_from(a, b, da, |x| alg.delta_second_order(x))
                .expect("homogeneous");
            total.sub(&plain)
        }
        "antisymmetry" => {
            let ab = br(a, b, BracketKind::Total);
            let ba = br(b, a, BracketKind::Total);
            ab.add(&ba.scale(&sgn((da + 1) * (db + 1))))
        }
        "jacobi" => {
            let k = BracketKind::Total;
            let lhs = br(a, &br(b, c, k), k);
            let bc_ab = br(a, b, k);
            let r1 = if bc_ab.is_zero() { alg.zero() } else { br(&bc_ab, c, k) };
            let r2 = br(b, &br(a, c, k), k).scale(&sgn((da + 1) * (db + 1)));
            lhs.sub(&r1).sub(&r2)
        }
        "d_derivation_of_bracket" | "delta_derivation_of_bracket" => {
            let op = |x: &Element| if name.starts_with("d_") { d(x) } else { delta(x) };
            let k = BracketKind::Total;
            let lhs = op(&br(a, b, k));
            let oa = op(a);
            let r1 = if oa.is_zero() { alg.zero() } else { br(&oa, b, k) };
            let r2 = br(a, &op(b), k).scale(&sgn(da + 1));
            lhs.sub(&r1).sub(&r2)
        }
        "representative_independence" => {
            let w = &s.word;
            if w.is_empty() {
                return alg.zero();
            }
            let k = s.rotation % w.len();
            let rot: Vec<usize> = w[k..].iter().chain(&w[..k]).copied().collect();
            let sign = if alg.rotation_sign(w, k) { -Scalar::one() } else { Scalar::one() };
            let split = |word: &Vec<usize>| -> Element {
                alg.normalize(
                    alg.split_word(word)
                        .into_iter()
                        .map(|(v, x, y)| (v, vec![Factor::Cyclic(x), Factor::Cyclic(y)])),
                )
            };
            let mut out = split(w).sub(&split(&rot).scale(&sign));
            // o-bracket against the second sample word in both representatives
            let other: Vec<usize> = b
                .terms()
                .keys()
                .flat_map(|m| m.cyclic().next().cloned())
                .next()
                .unwrap_or_default();
            let join = |word: &Vec<usize>| -> Element {
                alg.normalize(
                    alg.obracket_words(word, &other)
                        .into_iter()
                        .map(|(v, x)| (v, vec![Factor::Cyclic(x)])),
                )
            };
            out = out.add(&join(w).sub(&join(&rot).scale(&sign)));
            out
        }
        "direct_obracket_agrees" => {
            let single = |x: &Element| x.filter(|m| m.factors().len() == 1 && m.n_cyclic() == 1);
            let (sa, sb) = (single(a), single(b));
            if sa.is_zero() {
                return alg.zero();
            }
            let via_delta = br(&sa, &sb, BracketKind::Open);
            let direct = alg.direct_obracket(&sa, &sb).expect("single words");
            via_delta.sub(&direct)
        }
        other => panic!("unknown identity {other}"),
    }
}

pub fn sample(rng: &mut rand_chacha::ChaCha8Rng, alg: &OcAlgebra, cfg: &RandomConfig) -> Sample {
    use rand::Rng;
    let a = random_homogeneous(rng, alg, cfg);
    let b = random_homogeneous(rng, alg, cfg);
    let c = random_homogeneous(rng, alg, cfg);
    let no = alg.spec().open.basis.len();
    let len = rng.gen_range(1..=cfg.max_word);
    let word = (0..len).map(|_| rng.gen_range(0..no)).collect();
    let rotation = rng.gen_range(0..cfg.max_word);
    Sample { a, b, c, word, rotation }
}

/// Runs every identity on one trial.
pub fn run_trial(master: u64, trial: u64, cfg: &RandomConfig, mutate: bool) -> TrialResult {
    let seed = trial_seed(master, trial);
    let mut r = rng(seed);
    let spec = random_spec(&mut r, cfg);
    let alg = OcAlgebra::new(spec).with_sign_mutation(mutate);
    let s = sample(&mut r, &alg, cfg);
    let mut failures = Vec::new();
    for &name in IDENTITIES {
        let res = residual(&alg, name, &s);
        if !res.is_zero() {
            failures.push(Reproducer {
                trial,
                seed,
                identity: name.to_string(),
                spec: alg.spec().to_json(),
                elements: [&s.a, &s.b, &s.c].iter().map(|e| alg.element_to_json(e)).collect(),
                residual: alg.element_to_json(&res),
            });
        }
    }
    TrialResult {
        trial,
        seed,
        checked: IDENTITIES.len(),
        failures,
    }
}

pub fn run_suite(master: u64, trials: u64, cfg: &RandomConfig, mutate: bool) -> SuiteReport {
    let mut results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(master, t, cfg, mutate))
        .collect();
    results.sort_by_key(|r| r.trial);
    let mut tally: BTreeMap<String, IdentityTally> = IDENTITIES
        .iter()
        .map(|n| (n.to_string(), IdentityTally::default()))
        .collect();
    let mut reproducers: Vec<Reproducer> = Vec::new();
    for r in &results {
        for n in IDENTITIES {
            tally.get_mut(*n).expect("known identity").checked += 1;
        }
        for f in &r.failures {
            let t = tally.get_mut(&f.identity).expect("known identity");
            t.failed += 1;
            if t.failed == 1 {
                reproducers.push(f.clone());
            }
        }
    }
    SuiteReport {
        master_seed: master,
        trials,
        checks: results.iter().map(|r| r.checked).sum(),
        failed_trials: results.iter().filter(|r| !r.failures.is_empty()).count() as u64,
        identities: tally,
        reproducers,
    }
}
