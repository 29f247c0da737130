//! Command-line front end: configuration, subcommands and file output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Subcommand};

pub use config::RunConfig;
pub use error::CliError;
pub use output::Outputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Prime points and P(lambda) for each radius.
    Enumerate,
    /// P(lambda), Hua ratio and truncated singular series over the progression.
    HuaScan,
    /// Sup of sigma_lambda and of the main-term kernel, with power-law fits.
    KernelDecay,
    /// Raw, main and error multipliers on a frequency grid.
    Multiplier,
    /// Bracketed l^p -> l^p' norms with reference exponents.
    Improving,
    /// Sup over dyadic blocks of radii.
    Dyadic,
    /// Quick internal consistency checks.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Enumerate => "enumerate",
            Command::HuaScan => "hua-scan",
            Command::KernelDecay => "kernel-decay",
            Command::Multiplier => "multiplier",
            Command::Improving => "improving",
            Command::Dyadic => "dyadic",
            Command::Selftest => "selftest",
        }
    }
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// A radius or a comma-separated list.
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    #[arg(long = "lambda-min", global = true)]
    pub lambda_min: Option<u64>,
    #[arg(long = "lambda-max", global = true)]
    pub lambda_max: Option<u64>,
    /// all, default, nonempty, mod:R:M or mod:R:M+nonempty.
    #[arg(long, global = true)]
    pub progression: Option<String>,
    /// Cap on the derived Q, or "none".
    #[arg(long = "Q-cap", global = true)]
    pub q_cap: Option<String>,
    /// Fixed Q, or "auto".
    #[arg(long = "Q", global = true)]
    pub q: Option<String>,
    #[arg(long = "q-max", global = true)]
    pub q_max: Option<String>,
    #[arg(long = "B", global = true)]
    pub b: Option<String>,
    #[arg(long = "C", global = true)]
    pub c: Option<String>,
    #[arg(long, global = true)]
    pub theta: Option<String>,
    #[arg(long = "quad-points", global = true)]
    pub quad_points: Option<String>,
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    /// mass or unit.
    #[arg(long, global = true)]
    pub normalization: Option<String>,
    /// Repeatable exponent in [1, 2].
    #[arg(long, global = true)]
    pub p: Vec<f64>,
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long = "box-radius", global = true)]
    pub box_radius: Option<String>,
    #[arg(long = "with-log", global = true)]
    pub with_log: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// key = value file applied before the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Flags {
    fn assignments(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = Vec::new();
        let mut put = |k: &'static str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k, x));
            }
        };
        put("n", self.n.map(|x| x.to_string()));
        put("k", self.k.map(|x| x.to_string()));
        put("lambda", self.lambda.clone());
        put("lambda_min", self.lambda_min.map(|x| x.to_string()));
        put("lambda_max", self.lambda_max.map(|x| x.to_string()));
        put("progression", self.progression.clone());
        put("Q_cap", self.q_cap.clone());
        put("Q", self.q.clone());
        put("q_max", self.q_max.clone());
        put("B", self.b.clone());
        put("C", self.c.clone());
        put("theta", self.theta.clone());
        put("quad_points", self.quad_points.clone());
        put("epsilon", self.epsilon.clone());
        put("normalization", self.normalization.clone());
        if !self.p.is_empty() {
            put("p", Some(self.p.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")));
        }
        put("grid", self.grid.map(|x| x.to_string()));
        put("samples", self.samples.map(|x| x.to_string()));
        put("box_radius", self.box_radius.clone());
        if self.with_log {
            put("with_log", Some("true".into()));
        }
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("format", self.format.clone());
        put("seed", self.seed.map(|x| x.to_string()));
        v
    }

    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            c.apply_text(&text)?;
        }
        for (k, v) in self.assignments() {
            c.set(k, &v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Runs a data-producing command and returns its files without writing them.
pub fn build(command: Command, config: &RunConfig) -> Result<Outputs, CliError> {
    match command {
        Command::Enumerate => commands::enumerate(config),
        Command::HuaScan => commands::hua_scan(config),
        Command::KernelDecay => commands::kernel_decay(config),
        Command::Multiplier => commands::multiplier(config),
        Command::Improving => commands::improving(config),
        Command::Dyadic => commands::dyadic(config),
        Command::Selftest => Ok(Outputs::default()),
    }
}

/// Runs `command` and writes its files; returns the written paths.
pub fn run(command: Command, config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if command == Command::Selftest {
        let results = commands::selftest();
        let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
        for (name, ok, detail) in &results {
            println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        }
        return if failed.is_empty() { Ok(Vec::new()) } else { Err(CliError::SelfTest(failed.join(", "))) };
    }
    build(command, config)?.write(command.name(), config)
}
