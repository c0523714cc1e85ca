//! Batch driver for the `dioph` library: constructions, measurements, oracle enumeration,
//! invariant verification and report merging.

pub mod build;
pub mod commands;
pub mod config;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dioph::constructions::Mode;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precision failure: {0}")]
    Precision(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Precision(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<dioph::Error> for CliError {
    fn from(e: dioph::Error) -> Self {
        use dioph::Error as E;
        match e {
            E::Precision { .. } => CliError::Precision(e.to_string()),
            E::Verification(_) | E::TooFewRecords(_) => CliError::Verification(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Theorem,
    Relaxed,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Theorem => Mode::Theorem,
            ModeArg::Relaxed => Mode::Relaxed,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dioph", version, about = "Heights, angles and Diophantine exponents of rational subspaces")]
pub struct Cli {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub precision_bits: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(subcommand)]
    pub command: Command,
}

/// Construction parameters accepted inline; they replace the config's `[construction]` table.
#[derive(Debug, Default, Args)]
pub struct ConstructionArgs {
    #[arg(long, value_parser = ["ch5", "ch6", "ch7", "ch8"])]
    pub variant: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub theta: Option<u64>,
    /// Comma-separated rationals; ch7 rows are separated by `;`.
    #[arg(long)]
    pub betas: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct RangeArgs {
    #[arg(long = "N-min")]
    pub n_min: Option<usize>,
    #[arg(long = "N-max")]
    pub n_max: Option<usize>,
    /// Comma-separated family dimensions.
    #[arg(long, value_delimiter = ',')]
    pub e: Option<Vec<usize>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a construction and export its descriptor and approximating families.
    Construct {
        #[command(flatten)]
        c: ConstructionArgs,
        #[command(flatten)]
        r: RangeArgs,
    },
    /// Measure ψ_j along the constructed families and estimate the exponents.
    Measure {
        #[command(flatten)]
        c: ConstructionArgs,
        #[command(flatten)]
        r: RangeArgs,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        /// Also measure ψ_j(A_M⊥, B⊥) against a rational truncation A_M.
        #[arg(long)]
        duality: bool,
    },
    /// Best-approximation records by exhaustive enumeration up to a height bound.
    Enumerate {
        #[command(flatten)]
        c: ConstructionArgs,
        /// `construction` or `sqrt:S`.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        e: Option<usize>,
        /// Height bound on H.
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Run invariant suites and write a pass/fail matrix.
    Verify {
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Merge measured estimates with predictions.
    Report {
        #[arg(long = "input")]
        inputs: Vec<String>,
    },
}

fn split_rats(s: &str) -> Result<Vec<config::Rat>, CliError> {
    s.split(',').map(|x| x.trim().parse().map_err(|e| CliError::Config(format!("--betas: {e}")))).collect()
}

impl ConstructionArgs {
    fn is_empty(&self) -> bool {
        self.variant.is_none()
    }

    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        use config::ConstructionConfig as C;
        let Some(v) = &self.variant else {
            if self.n.is_some() || self.betas.is_some() || self.alpha.is_some() || self.d.is_some() {
                return Err(CliError::Config("--variant is required with inline construction flags".into()));
            }
            return Ok(());
        };
        let need = |x: Option<usize>, name: &str| x.ok_or_else(|| CliError::Config(format!("--{name} is required for {v}")));
        let theta = self.theta.unwrap_or(config::DEFAULT_THETA);
        let betas = || self.betas.as_deref().ok_or_else(|| CliError::Config(format!("--betas is required for {v}")));
        let c = match v.as_str() {
            "ch5" => C::Ch5 { n: need(self.n, "n")?, theta, betas: split_rats(betas()?)? },
            "ch6" => C::Ch6 { n: need(self.n, "n")?, d: need(self.d, "d")?, theta, betas: split_rats(betas()?)?, level_betas: None },
            "ch7" => C::Ch7 {
                d: need(self.d, "d")?,
                m: need(self.m, "m")?,
                theta,
                betas: betas()?.split(';').map(split_rats).collect::<Result<_, _>>()?,
                c2: self.c2.unwrap_or(1.1),
            },
            _ => C::Ch8 {
                d: need(self.d, "d")?,
                q: need(self.q, "q")?,
                theta,
                alpha: self.alpha.as_deref().ok_or_else(|| CliError::Config("--alpha is required for ch8".into()))?.parse().map_err(|e| CliError::Config(format!("--alpha: {e}")))?,
            },
        };
        cfg.construction = Some(c);
        Ok(())
    }
}

impl RangeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.n_min.is_some() {
            cfg.measure.n_min = self.n_min;
        }
        if self.n_max.is_some() {
            cfg.measure.n_max = self.n_max;
        }
        if self.e.is_some() {
            cfg.measure.e = self.e.clone();
        }
    }
}

/// Loads the config, applies flag overrides and resolves defaults.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(m) = cli.mode {
        cfg.mode = Some(m.into());
    }
    if cli.precision_bits.is_some() {
        cfg.precision_bits = cli.precision_bits;
    }
    match &cli.command {
        Command::Construct { c, r } => {
            c.apply(&mut cfg)?;
            r.apply(&mut cfg);
        }
        Command::Measure { c, r, j, window, duality } => {
            c.apply(&mut cfg)?;
            r.apply(&mut cfg);
            if j.is_some() {
                cfg.measure.j = *j;
            }
            if window.is_some() {
                cfg.measure.window = *window;
            }
            cfg.measure.duality |= duality;
        }
        Command::Enumerate { c, target, e, bound } => {
            if !c.is_empty() {
                c.apply(&mut cfg)?;
            }
            let en = &mut cfg.enumerate;
            if target.is_some() {
                en.target = target.clone();
            }
            if c.n.is_some() {
                en.n = c.n;
            }
            if e.is_some() {
                en.e = *e;
            }
            if bound.is_some() {
                en.bound = *bound;
            }
            if en.target.is_none() && en.bound.is_none() {
                en.bound = Some(1000);
            }
        }
        Command::Verify { suites, cases } => {
            if !suites.is_empty() {
                cfg.verify.suites = Some(suites.clone());
            }
            if cases.is_some() {
                cfg.verify.cases = *cases;
            }
        }
        Command::Report { inputs } => {
            if !inputs.is_empty() {
                cfg.report.inputs = Some(inputs.clone());
            }
        }
    }
    cfg.resolve()
}

/// Runs one command; the returned error carries the exit code.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build().map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Construct { .. } => commands::construct(&cfg, &cli.out),
        Command::Measure { .. } => commands::measure(&cfg, &cli.out),
        Command::Enumerate { .. } => commands::enumerate(&cfg, &cli.out),
        Command::Verify { .. } => commands::verify(&cfg, &cli.out),
        Command::Report { .. } => commands::report(&cfg, &cli.out),
    })
}
