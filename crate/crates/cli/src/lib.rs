use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use report::{Failure, Outcome, RunConfig};

/// Command-line arguments of the `ocbv` tool.
#[derive(Parser, Debug)]
#[command(name = "ocbv", version, about = "Exact-rational open-closed BV algebra engine")]
pub struct Cli {
    /// Emit machine-readable JSON reports
    #[arg(long, global = true)]
    pub json: bool,

    /// Master seed for randomized runs
    #[arg(long, global = true, env = "OCBV_SEED", default_value_t = 7)]
    pub seed: u64,

    /// Number of randomized trials
    #[arg(long, global = true, default_value_t = 200)]
    pub trials: u64,

    /// Highest λ exponent kept in series
    #[arg(long, global = true, default_value_t = 6)]
    pub lambda_max: u32,

    /// Lowest √ħ exponent kept in series
    #[arg(long, global = true, default_value_t = -6, allow_negative_numbers = true)]
    pub hbar_half_min: i32,

    /// Highest √ħ exponent kept in series
    #[arg(long, global = true, default_value_t = 6, allow_negative_numbers = true)]
    pub hbar_half_max: i32,

    /// Longest symmetric word kept by L∞ residuals
    #[arg(long, global = true, default_value_t = 6)]
    pub word_max: usize,

    /// Test hook: corrupt one sign in the open splitting operator
    #[arg(long, global = true, hide = true)]
    pub mutate: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a spec file against the grading and compatibility rules
    Validate { spec: PathBuf },
    /// Run the randomized BV identity suite
    Axioms(AxiomArgs),
    /// Residual of the quantum master equation
    Qme { spec: PathBuf, series: PathBuf },
    /// Residual of the classical master equation
    Cme { spec: PathBuf, series: PathBuf },
    /// Cyclic A∞ chains and their Hochschild cochains
    Ainf(AinfArgs),
    /// L∞ coalgebra differential of a closed-sector solution
    Linf {
        spec: PathBuf,
        series: PathBuf,
        /// Evaluate D² on generators instead of printing D
        #[arg(long)]
        check: bool,
    },
    /// Surface-type combinatorics
    Moduli(ModuliArgs),
    /// Sign of a relabeling under ρ
    Rho(RhoArgs),
}

#[derive(Args, Debug)]
pub struct AxiomArgs {
    #[arg(long, default_value_t = 4)]
    pub max_basis: usize,
    #[arg(long, default_value_t = -3, allow_negative_numbers = true)]
    pub degree_min: i64,
    #[arg(long, default_value_t = 3, allow_negative_numbers = true)]
    pub degree_max: i64,
    #[arg(long, default_value_t = 4)]
    pub max_word: usize,
    #[arg(long, default_value_t = 3)]
    pub max_factors: usize,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("mode").required(true).args(["to_hat", "from_hat", "check"])))]
pub struct AinfArgs {
    pub spec: PathBuf,
    pub input: PathBuf,
    /// Cyclic chain to Hochschild cochains
    #[arg(long)]
    pub to_hat: bool,
    /// Hochschild cochains to cyclic chain
    #[arg(long)]
    pub from_hat: bool,
    /// Stasheff residual of a chain or of cochains
    #[arg(long)]
    pub check: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModuliQuery {
    Stable,
    Chi,
    Dim,
    Weights,
    Boundary,
    Bookkeep,
    Rho,
}

#[derive(Args, Debug)]
pub struct ModuliArgs {
    #[arg(value_enum)]
    pub query: ModuliQuery,
    pub g: u32,
    pub b: u32,
    pub n: u32,
    pub m: u32,
    /// Weight of Δ_co in the master equation, in √ħ units
    #[arg(long, default_value_t = 3)]
    pub co_weight: i64,
    /// Punctures per boundary, for `rho`
    #[arg(long, value_delimiter = ',')]
    pub profile: Vec<u32>,
}

#[derive(Args, Debug)]
pub struct RhoArgs {
    /// Punctures per boundary
    #[arg(long, value_delimiter = ',')]
    pub profile: Vec<u32>,
    /// Cyclic offset per boundary
    #[arg(long, value_delimiter = ',')]
    pub offsets: Vec<u32>,
    /// New boundary order, as old indices
    #[arg(long, value_delimiter = ',')]
    pub boundary: Vec<usize>,
    /// New interior order, as old indices
    #[arg(long, value_delimiter = ',')]
    pub interior: Vec<usize>,
}

/// What a run printed and how it exited.
pub struct Execution {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and runs the command in process.
pub fn run<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let (stdout, stderr) = if e.use_stderr() { (String::new(), text) } else { (text, String::new()) };
            return Execution { code, stdout, stderr };
        }
    };
    let cfg = RunConfig::from_cli(&cli);
    let outcome = commands::dispatch(&cli, &cfg);
    let code = match &outcome {
        Ok(o) if o.passed => 0,
        Ok(_) => 1,
        Err(_) => 2,
    };
    let (stdout, stderr) = report::render(cli.json, &cfg, outcome);
    Execution { code, stdout, stderr }
}

pub(crate) fn fail(msg: impl Into<String>) -> Failure {
    Failure(msg.into())
}

pub(crate) type CmdResult = Result<Outcome, Failure>;
