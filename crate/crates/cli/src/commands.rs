use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use ocbv::algebra::{ElementJson, OcAlgebra};
use ocbv::axioms::run_suite;
use ocbv::homotopy::{
    chain_from_json, chain_to_json, cochain_from_json, cochain_to_json, cyclic_from_hat, hat_from_cyclic,
    linf_extract, linf_residual, stasheff_residual, CyclicChainJson, HochschildCochain, HochschildCochainJson,
};
use ocbv::master::{cme_residual, exp_qme_check, lowest_defect, qme_residual, series_to_json, MasterSeries};
use ocbv::moduli::{
    boundary_expansion, bookkeeping_check, dimension, euler_char, is_stable, rho_sign, weights, BoundaryKind,
    OperatorWeights, Relabeling, SurfaceType,
};
use ocbv::random::RandomConfig;
use ocbv::series::{Bounds, Series};
use ocbv::spaces::AlgebraSpec;
use ocbv::Scalar;

use crate::report::{Outcome, RunConfig};
use crate::{fail, AinfArgs, AxiomArgs, Cli, CmdResult, Command, ModuliArgs, ModuliQuery, RhoArgs};

pub fn dispatch(cli: &Cli, cfg: &RunConfig) -> CmdResult {
    if cfg.trials == 0 {
        return Err(fail("--trials must be at least 1"));
    }
    if cfg.hbar_half_min > cfg.hbar_half_max {
        return Err(fail("--hbar-half-min exceeds --hbar-half-max"));
    }
    match &cli.command {
        Command::Validate { spec } => validate(spec),
        Command::Axioms(a) => axioms(a, cfg),
        Command::Qme { spec, series } => master(spec, series, cfg, true),
        Command::Cme { spec, series } => master(spec, series, cfg, false),
        Command::Ainf(a) => ainf(a, cfg),
        Command::Linf { spec, series, check } => linf(spec, series, *check, cfg),
        Command::Moduli(m) => moduli(m),
        Command::Rho(r) => rho(r),
    }
}

fn read(path: &Path) -> Result<String, crate::report::Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, crate::report::Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn load_algebra(path: &Path, cfg: &RunConfig) -> Result<OcAlgebra, crate::report::Failure> {
    let spec = AlgebraSpec::from_json_str(&read(path)?).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    Ok(OcAlgebra::validated(spec)?.with_sign_mutation(cfg.mutate))
}

fn bounds(cfg: &RunConfig) -> Bounds {
    Bounds {
        lambda_max: cfg.lambda_max,
        half_hbar_min: cfg.hbar_half_min,
        half_hbar_max: cfg.hbar_half_max,
    }
}

fn load_series(alg: &OcAlgebra, path: &Path, cfg: &RunConfig) -> Result<MasterSeries, crate::report::Failure> {
    Ok(MasterSeries::from_json(alg, &parse(path)?, bounds(cfg))?)
}

fn validate(spec: &Path) -> CmdResult {
    let spec = AlgebraSpec::from_json_str(&read(spec)?).map_err(|e| fail(format!("{}: {e}", spec.display())))?;
    let rep = spec.validate();
    let mut text = String::new();
    if rep.is_admissible() {
        text.push_str("admissible");
    }
    for v in &rep.violations {
        let _ = writeln!(text, "{}: {}", v.code, v.message);
    }
    Ok(Outcome::new(rep.is_admissible(), &rep, text))
}

fn axioms(a: &AxiomArgs, cfg: &RunConfig) -> CmdResult {
    if a.max_basis == 0 || a.degree_min > a.degree_max {
        return Err(fail("random basis needs --max-basis ≥ 1 and --degree-min ≤ --degree-max"));
    }
    let rc = RandomConfig {
        max_basis: a.max_basis,
        degree_min: a.degree_min,
        degree_max: a.degree_max,
        max_word: a.max_word,
        max_factors: a.max_factors,
        ..RandomConfig::default()
    };
    let rep = run_suite(cfg.seed, cfg.trials, &rc, cfg.mutate);
    let mut text = String::new();
    for (name, t) in &rep.identities {
        let mark = if t.failed == 0 { "ok  " } else { "FAIL" };
        let _ = writeln!(text, "{mark} {name:<44} {:>4} checked {:>4} failed", t.checked, t.failed);
    }
    let _ = writeln!(
        text,
        "{} trials, {} checks, {} failing trials (seed {})",
        rep.trials, rep.checks, rep.failed_trials, rep.master_seed
    );
    if let Some(r) = rep.reproducers.first() {
        let _ = writeln!(text, "first failure: {} at trial {} (seed {})", r.identity, r.trial, r.seed);
    }
    Ok(Outcome::new(rep.passed(), &rep, text))
}

#[derive(Serialize)]
struct KeyJson {
    lambda: u32,
    sqrt_hbar: i32,
}

#[derive(Serialize)]
struct ResidualJson {
    zero: bool,
    lowest: Option<KeyJson>,
    residual: ocbv::master::MasterSeriesJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    exp_check: Option<ocbv::master::ExpQmeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exp_check_skipped: Option<String>,
}

fn series_text(alg: &OcAlgebra, s: &Series<ocbv::algebra::Element>) -> String {
    let mut text = String::new();
    for (k, v) in s.iter() {
        if !v.is_zero() {
            let _ = writeln!(text, "\u{3bb}^{} \u{221a}\u{127}^{}: {}", k.0, k.1, alg.display(v));
        }
    }
    text
}

fn master(spec: &Path, series: &Path, cfg: &RunConfig, quantum: bool) -> CmdResult {
    let alg = load_algebra(spec, cfg)?;
    let s = load_series(&alg, series, cfg)?;
    let r = if quantum { qme_residual(&alg, &s)? } else { cme_residual(&alg, &s)? };
    let lowest = lowest_defect(&r).map(|(k, _)| KeyJson {
        lambda: k.0,
        sqrt_hbar: k.1,
    });
    let (exp_check, exp_check_skipped) = if quantum {
        match exp_qme_check(&alg, &s) {
            Ok(rep) => (Some(rep), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let consistent = exp_check.as_ref().is_none_or(|e| e.agree());
    let zero = r.is_zero();
    let mut text = if zero {
        format!("residual vanishes up to \u{3bb}^{}\n", cfg.lambda_max)
    } else {
        let k = lowest.as_ref().expect("nonzero residual");
        let mut t = format!("lowest nonzero key: \u{3bb}^{} \u{221a}\u{127}^{}\n", k.lambda, k.sqrt_hbar);
        t.push_str(&series_text(&alg, &r));
        t
    };
    if let Some(e) = &exp_check {
        let _ = writeln!(
            text,
            "exponential form: {} (identity {})",
            if e.exp_zero { "vanishes" } else { "nonzero" },
            if e.identity_holds { "holds" } else { "fails" }
        );
    }
    let out = ResidualJson {
        zero,
        lowest,
        residual: series_to_json(&alg, &r),
        exp_check,
        exp_check_skipped,
    };
    Ok(Outcome::new(zero && consistent, out, text))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CochainsJson {
    pub cochains: Vec<HochschildCochainJson>,
}

enum AinfInput {
    Chain(CyclicChainJson),
    Cochains(CochainsJson),
}

fn read_ainf_input(path: &Path) -> Result<AinfInput, crate::report::Failure> {
    let v: serde_json::Value = parse(path)?;
    let bad = |e: serde_json::Error| fail(format!("{}: {e}", path.display()));
    if v.get("cochains").is_some() {
        Ok(AinfInput::Cochains(serde_json::from_value(v).map_err(bad)?))
    } else {
        Ok(AinfInput::Chain(serde_json::from_value(v).map_err(bad)?))
    }
}

fn cochain_text(alg: &OcAlgebra, f: &HochschildCochain) -> String {
    let b = &alg.spec().open.basis;
    let mut text = String::new();
    for (w, o, c) in f.entries() {
        let args: Vec<&str> = w.iter().map(|&v| b.name(v)).collect();
        let _ = writeln!(text, "m{}({}) \u{220b} {} {}", f.arity(), args.join(", "), c, b.name(o));
    }
    text
}

fn ainf(a: &AinfArgs, cfg: &RunConfig) -> CmdResult {
    let alg = load_algebra(&a.spec, cfg)?;
    let input = read_ainf_input(&a.input)?;
    let cochains = |j: &CochainsJson| -> Result<Vec<HochschildCochain>, crate::report::Failure> {
        Ok(j.cochains
            .iter()
            .map(|c| cochain_from_json(&alg, c))
            .collect::<ocbv::Result<_>>()?)
    };
    if a.to_hat {
        let AinfInput::Chain(j) = input else {
            return Err(fail("--to-hat expects a cyclic chain"));
        };
        let mhat = hat_from_cyclic(&alg, &chain_from_json(&alg, &j)?)?;
        let text: String = mhat.values().map(|f| cochain_text(&alg, f)).collect();
        let out = CochainsJson {
            cochains: mhat.values().map(|f| cochain_to_json(&alg, f)).collect(),
        };
        return Ok(Outcome::new(true, out, text));
    }
    if a.from_hat {
        let AinfInput::Cochains(j) = input else {
            return Err(fail("--from-hat expects {\"cochains\": [...]}"));
        };
        let m = cyclic_from_hat(&alg, &cochains(&j)?)?;
        let mut text = String::new();
        for (k, e) in &m.terms {
            let _ = writeln!(text, "\u{3bb}^{}: {}", k - 1, alg.display(e));
        }
        return Ok(Outcome::new(true, chain_to_json(&alg, &m), text));
    }
    let mhat: Vec<HochschildCochain> = match input {
        AinfInput::Chain(j) => hat_from_cyclic(&alg, &chain_from_json(&alg, &j)?)?.into_values().collect(),
        AinfInput::Cochains(j) => cochains(&j)?,
    };
    let res = stasheff_residual(&alg, &mhat);
    #[derive(Serialize)]
    struct ArityJson {
        arity: usize,
        zero: bool,
        residual: HochschildCochainJson,
    }
    let arities: Vec<ArityJson> = res
        .values()
        .map(|f| ArityJson {
            arity: f.arity(),
            zero: f.is_zero(),
            residual: cochain_to_json(&alg, f),
        })
        .collect();
    let clean = arities.iter().all(|x| x.zero);
    let mut text = String::new();
    if clean {
        let _ = writeln!(text, "Stasheff relations hold in arities 1..={}", res.len());
    }
    for f in res.values().filter(|f| !f.is_zero()) {
        let _ = writeln!(text, "arity {}: {} nonzero entries", f.arity(), f.entries().count());
        text.push_str(&cochain_text(&alg, f));
    }
    #[derive(Serialize)]
    struct CheckJson {
        zero: bool,
        arities: Vec<ArityJson>,
    }
    Ok(Outcome::new(clean, CheckJson { zero: clean, arities }, text))
}

fn linf(spec: &Path, series: &Path, check: bool, cfg: &RunConfig) -> CmdResult {
    let alg = load_algebra(spec, cfg)?;
    let s = load_series(&alg, series, cfg)?;
    let ex = linf_extract(&alg, &s)?;
    let mut text = String::new();
    for w in &ex.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    if check {
        let rep = linf_residual(&alg, &ex.differential, cfg.word_max);
        if rep.is_clean() {
            let _ = writeln!(text, "D\u{b2} = 0 on all generators up to word length {}", rep.word_max);
        }
        for d in &rep.defects {
            let e = alg.element_from_json(&d.element)?;
            let _ = writeln!(text, "D\u{b2}({}) at length {}: {}", d.generator, d.word_length, alg.display(&e));
        }
        #[derive(Serialize)]
        struct CheckJson<'a> {
            warnings: &'a [String],
            report: &'a ocbv::homotopy::LinfReport,
        }
        let out = CheckJson {
            warnings: &ex.warnings,
            report: &rep,
        };
        return Ok(Outcome::new(rep.is_clean(), out, text));
    }
    let names = &alg.spec().closed.basis;
    let mut comps: BTreeMap<String, BTreeMap<String, ElementJson>> = BTreeMap::new();
    for (k, m) in &ex.differential.components {
        let slot = comps.entry(format!("D{k}")).or_default();
        for (x, e) in m {
            if !e.is_zero() {
                let _ = writeln!(text, "D{k}({}) = {}", names.name(*x), alg.display(e));
                slot.insert(names.name(*x).to_string(), alg.element_to_json(e));
            }
        }
    }
    #[derive(Serialize)]
    struct ExtractJson {
        warnings: Vec<String>,
        components: BTreeMap<String, BTreeMap<String, ElementJson>>,
    }
    Ok(Outcome::new(
        true,
        ExtractJson {
            warnings: ex.warnings,
            components: comps,
        },
        text,
    ))
}

fn kind_label(k: BoundaryKind) -> &'static str {
    match k {
        BoundaryKind::DeltaC => "DeltaC",
        BoundaryKind::DeltaOPrime => "DeltaOPrime",
        BoundaryKind::DeltaODouble => "DeltaODouble",
        BoundaryKind::DeltaCo => "DeltaCo",
        BoundaryKind::SplitC => "SplitC",
        BoundaryKind::SplitO => "SplitO",
    }
}

fn moduli(m: &ModuliArgs) -> CmdResult {
    let t = SurfaceType::new(m.g, m.b, m.n, m.m)?;
    match m.query {
        ModuliQuery::Stable => {
            let s = is_stable(t)?;
            Ok(Outcome::new(true, s, s.to_string()))
        }
        ModuliQuery::Chi => {
            let c = euler_char(t)?;
            Ok(Outcome::new(true, &c, c.to_string()))
        }
        ModuliQuery::Dim => {
            let d = dimension(t)?;
            Ok(Outcome::new(true, d, d.to_string()))
        }
        ModuliQuery::Weights => {
            let w = weights(t)?;
            let text = format!("\u{3bb}^{} \u{127}^{}", w.lambda_exp, Scalar::ratio(w.half_hbar_exp, 2));
            Ok(Outcome::new(true, w, text))
        }
        ModuliQuery::Boundary => {
            let e = boundary_expansion(t)?;
            let mut text = String::new();
            for term in &e.terms {
                let args: Vec<String> = term.args.iter().map(|a| a.to_string()).collect();
                let _ = writeln!(text, "{} {} {}", term.coeff, kind_label(term.kind), args.join(" + "));
            }
            if e.terms.is_empty() {
                text.push_str("no boundary terms");
            }
            Ok(Outcome::new(true, e, text))
        }
        ModuliQuery::Bookkeep => {
            let ow = OperatorWeights {
                delta_co: m.co_weight,
                ..OperatorWeights::default()
            };
            let rep = bookkeeping_check(t, ow)?;
            let mut text = format!("{} boundary terms, {} violations\n", rep.terms, rep.violations.len());
            for v in &rep.violations {
                let args: Vec<String> = v.args.iter().map(|a| a.to_string()).collect();
                let _ = writeln!(
                    text,
                    "{} {}: {} expected {} found {}",
                    kind_label(v.kind),
                    args.join(" + "),
                    v.relation,
                    v.expected,
                    v.found
                );
            }
            Ok(Outcome::new(rep.passed(), &rep, text))
        }
        ModuliQuery::Rho => {
            if m.profile.len() != m.b as usize || m.profile.iter().sum::<u32>() != m.m {
                return Err(fail(format!(
                    "--profile must list {} boundary counts summing to {}",
                    m.b, m.m
                )));
            }
            #[derive(Serialize)]
            struct GeneratorSign {
                generator: String,
                sign: Scalar,
            }
            let n = m.n as usize;
            let b = m.b as usize;
            let mut gens = Vec::new();
            for i in 0..b {
                let mut offsets = vec![0; b];
                offsets[i] = 1;
                let r = Relabeling::new((0..n).collect(), (0..b).collect(), offsets, m.profile.clone())?;
                gens.push((format!("zeta_{}", i + 1), r));
            }
            for i in 0..b.saturating_sub(1) {
                let mut order: Vec<usize> = (0..b).collect();
                order.swap(i, i + 1);
                let r = Relabeling::new((0..n).collect(), order, vec![0; b], m.profile.clone())?;
                gens.push((format!("tau_{}_{}", i + 1, i + 2), r));
            }
            for i in 0..n.saturating_sub(1) {
                let mut order: Vec<usize> = (0..n).collect();
                order.swap(i, i + 1);
                let r = Relabeling::new(order, (0..b).collect(), vec![0; b], m.profile.clone())?;
                gens.push((format!("sigma_{}_{}", i + 1, i + 2), r));
            }
            let mut out = Vec::new();
            let mut text = String::new();
            for (name, r) in gens {
                let sign = rho_sign(&r)?;
                let _ = writeln!(text, "{name}: {sign}");
                out.push(GeneratorSign { generator: name, sign });
            }
            Ok(Outcome::new(true, out, text))
        }
    }
}

fn rho(r: &RhoArgs) -> CmdResult {
    let b = r.profile.len();
    let boundary = if r.boundary.is_empty() { (0..b).collect() } else { r.boundary.clone() };
    let offsets = if r.offsets.is_empty() { vec![0; b] } else { r.offsets.clone() };
    let rel = Relabeling::new(r.interior.clone(), boundary, offsets, r.profile.clone())?;
    let sign = rho_sign(&rel)?;
    #[derive(Serialize)]
    struct RhoJson<'a> {
        relabeling: &'a Relabeling,
        sign: Scalar,
    }
    let text = sign.to_string();
    Ok(Outcome::new(
        true,
        RhoJson {
            relabeling: &rel,
            sign,
        },
        text,
    ))
}
