//! Configuration-driven runner for `critlog-core`: subcommands, file
//! formats, the decomposition cache and chain-parallel Monte Carlo.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;
pub mod parallel;

use std::fs;
use std::path::PathBuf;

use clap::Parser;
use serde_json::{json, Value};

use config::{parse_config, validate, Command, ConfigError, ExperimentConfig, Format, Resolved};
use output::{write_manifest, Sink, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "critlog", version, about = "Green functions, RG flows and Monte Carlo for 4-d critical walk and spin models")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON experiment config.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "K")]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Why a run did not pass.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    /// A flow left its domain or a quantity does not exist.
    Domain(String),
    Verification(String, Option<Value>),
    Io(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Domain(_) => EXIT_DOMAIN,
            Failure::Verification(..) => EXIT_VERIFY,
            Failure::Io(_) | Failure::Numerical(_) => EXIT_INTERNAL,
        }
    }

    fn status(&self) -> Status {
        let (status, message, details) = match self {
            Failure::Config(e) => ("config_error", e.to_string(), Some(serde_json::to_value(e).unwrap_or(Value::Null))),
            Failure::Domain(m) => ("domain_exit", m.clone(), None),
            Failure::Verification(m, d) => ("verification_failed", m.clone(), d.clone()),
            Failure::Io(m) => ("io_error", m.clone(), None),
            Failure::Numerical(m) => ("numerical_error", m.clone(), None),
        };
        Status { status, exit_code: self.exit_code(), message: Some(message), details }
    }
}

impl From<critlog_core::Error> for Failure {
    fn from(e: critlog_core::Error) -> Self {
        use critlog_core::Error as E;
        match e {
            E::InvalidArgument(m) => Failure::Config(ConfigError::plain(m)),
            E::Domain(m) => Failure::Domain(m),
            e @ (E::NoConvergence(_) | E::Singular) => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<cache::CacheFailure> for Failure {
    fn from(e: cache::CacheFailure) -> Self {
        match e {
            cache::CacheFailure::Core(e) => e.into(),
            cache::CacheFailure::Io(e) => e.into(),
        }
    }
}

/// Everything a subcommand needs besides its parameters.
pub struct Ctx<'a> {
    pub sink: &'a mut Sink,
    pub format: Format,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    /// Seeds actually used, for the manifest.
    pub seeds: Vec<u64>,
    /// Human-readable lines printed on success.
    pub summary: Vec<String>,
    /// Extra machine-readable results for the manifest.
    pub details: Option<Value>,
}

struct Prepared {
    resolved: Resolved,
    out: PathBuf,
    threads: Option<usize>,
    cache_dir: Option<PathBuf>,
}

fn prepare(cli: &Cli) -> Result<Prepared, Failure> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::plain(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(ConfigError::field(
                "command",
                format!("config is for `{}`, not `{}`", c.name(), cli.command.name()),
            )
            .into());
        }
    }
    let threads = cli.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(ConfigError::field("threads", "must be >= 1").into());
    }
    let params = cfg.params(cli.command);
    validate(&params)?;
    let resolved = Resolved {
        command: cli.command,
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        format: cli.format.or(cfg.format).unwrap_or_default(),
        params,
    };
    let out = cli.out.clone().or_else(|| cfg.out.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("critlog-out"));
    Ok(Prepared { resolved, out, threads, cache_dir: cfg.cache_dir.map(PathBuf::from) })
}

fn report_failure(f: &Failure) {
    let status = f.status();
    eprintln!("{}", json!({ "status": status.status, "exit_code": status.exit_code, "message": status.message, "details": status.details }));
}

/// Run one subcommand; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let prep = match prepare(cli) {
        Ok(p) => p,
        Err(f) => {
            report_failure(&f);
            return f.exit_code();
        }
    };
    let mut sink = match Sink::new(&prep.out, &prep.resolved) {
        Ok(s) => s,
        Err(e) => {
            let f = Failure::from(e);
            report_failure(&f);
            return f.exit_code();
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = prep.threads {
        builder = builder.num_threads(k);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let f = Failure::Io(e.to_string());
            report_failure(&f);
            return f.exit_code();
        }
    };
    let mut ctx = Ctx {
        sink: &mut sink,
        format: prep.resolved.format,
        seed: prep.resolved.seed,
        cache_dir: prep.cache_dir.clone(),
        seeds: Vec::new(),
        summary: Vec::new(),
        details: None,
    };
    let result = pool.install(|| commands::execute(&prep.resolved.params, &mut ctx));
    let (seeds, summary, details) = (ctx.seeds, ctx.summary, ctx.details);
    for line in &summary {
        println!("{line}");
    }
    let status = match &result {
        Ok(()) => Status { status: "pass", exit_code: EXIT_OK, message: None, details },
        Err(f) => {
            report_failure(f);
            let mut s = f.status();
            if s.details.is_none() {
                s.details = details;
            }
            s
        }
    };
    if let Err(e) = write_manifest(&sink, &prep.resolved, &seeds, &status) {
        eprintln!("cannot write manifest: {e}");
        return EXIT_INTERNAL;
    }
    status.exit_code
}
