use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::{Cli, Command};

/// Everything a run depends on, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub trials: u64,
    pub lambda_max: u32,
    pub hbar_half_min: i32,
    pub hbar_half_max: i32,
    pub word_max: usize,
    pub mutate: bool,
    pub options: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Self {
        let path = |p: &std::path::PathBuf| p.display().to_string();
        let mut options = BTreeMap::new();
        let (command, inputs) = match &cli.command {
            Command::Validate { spec } => ("validate", vec![path(spec)]),
            Command::Axioms(a) => {
                options.insert("max_basis".into(), a.max_basis.into());
                options.insert("degree_min".into(), a.degree_min.into());
                options.insert("degree_max".into(), a.degree_max.into());
                options.insert("max_word".into(), a.max_word.into());
                options.insert("max_factors".into(), a.max_factors.into());
                ("axioms", vec![])
            }
            Command::Qme { spec, series } => ("qme", vec![path(spec), path(series)]),
            Command::Cme { spec, series } => ("cme", vec![path(spec), path(series)]),
            Command::Ainf(a) => {
                let mode = if a.to_hat {
                    "to_hat"
                } else if a.from_hat {
                    "from_hat"
                } else {
                    "check"
                };
                options.insert("mode".into(), mode.into());
                ("ainf", vec![path(&a.spec), path(&a.input)])
            }
            Command::Linf { spec, series, check } => {
                options.insert("check".into(), (*check).into());
                ("linf", vec![path(spec), path(series)])
            }
            Command::Moduli(m) => {
                let q = format!("{:?}", m.query).to_lowercase();
                options.insert("query".into(), q.into());
                options.insert("type".into(), vec![m.g, m.b, m.n, m.m].into());
                options.insert("co_weight".into(), m.co_weight.into());
                options.insert("profile".into(), m.profile.clone().into());
                ("moduli", vec![])
            }
            Command::Rho(r) => {
                options.insert("profile".into(), r.profile.clone().into());
                options.insert("offsets".into(), r.offsets.clone().into());
                options.insert("boundary".into(), r.boundary.clone().into());
                options.insert("interior".into(), r.interior.clone().into());
                ("rho", vec![])
            }
        };
        RunConfig {
            command: command.into(),
            inputs,
            seed: cli.seed,
            trials: cli.trials,
            lambda_max: cli.lambda_max,
            hbar_half_min: cli.hbar_half_min,
            hbar_half_max: cli.hbar_half_max,
            word_max: cli.word_max,
            mutate: cli.mutate,
            options,
        }
    }
}

/// A completed run: `passed` selects exit 0 or 1.
pub struct Outcome {
    pub passed: bool,
    pub result: Value,
    pub text: String,
}

impl Outcome {
    pub fn new(passed: bool, result: impl Serialize, text: impl Into<String>) -> Self {
        Outcome {
            passed,
            result: serde_json::to_value(result).expect("reports serialize"),
            text: text.into(),
        }
    }
}

/// An input or configuration error (exit 2).
#[derive(Debug)]
pub struct Failure(pub String);

impl From<ocbv::Error> for Failure {
    fn from(e: ocbv::Error) -> Self {
        Failure(e.to_string())
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Renders a run as (stdout, stderr).
pub fn render(json: bool, cfg: &RunConfig, outcome: Result<Outcome, Failure>) -> (String, String) {
    if json {
        let (status, result, error) = match outcome {
            Ok(o) => (if o.passed { "pass" } else { "fail" }, Some(o.result), None),
            Err(Failure(e)) => ("error", None, Some(e)),
        };
        let env = Envelope {
            tool: "ocbv",
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            status,
            result,
            error,
        };
        let mut out = serde_json::to_string_pretty(&env).expect("reports serialize");
        out.push('\n');
        (out, String::new())
    } else {
        match outcome {
            Ok(o) if o.text.trim_end().is_empty() => (String::new(), String::new()),
            Ok(o) => (format!("{}\n", o.text.trim_end()), String::new()),
            Err(Failure(e)) => (String::new(), format!("error: {e}\n")),
        }
    }
}
