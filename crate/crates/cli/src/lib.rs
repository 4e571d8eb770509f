//! Experiment runner behind the `qspin` binary.
//!
//! A run resolves a [`RunConfig`] (defaults, then an optional config file,
//! then flags), executes one subcommand, writes its tables and a JSON
//! manifest, and maps the outcome to an exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | every assertion passed |
//! | 1 | at least one assertion failed |
//! | 2 | bad configuration or flags |
//! | 3 | the library reported an error |
//! | 4 | an output file could not be written |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Arg, ArgAction, Command as ClapCommand};
use serde_json::{json, Map, Value};

pub use commands::{execute, Assertion, Outcome, RunError};
pub use config::{Command, ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_WRITE: i32 = 4;

/// Manifest path for an output table: `fig1.csv` gives `fig1.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Path of a secondary table: `fig1.csv` with suffix `levels` gives
/// `fig1_levels.csv`.
pub fn side_path(out: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn cli() -> ClapCommand {
    let mut cmd = ClapCommand::new("qspin")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Exact-diagonalization experiments on quantum spin systems")
        .arg(
            Arg::new("command")
                .required(true)
                .value_parser(Command::ALL.map(|c| c.name()))
                .help("subcommand to run"),
        )
        .arg(Arg::new("config").long("config").value_name("PATH").help("sectioned key = value file; flags override it"));
    for &(section, key, default, help) in config::KEYS {
        let help = if default.is_empty() { format!("[{section}] {help}") } else { format!("[{section}] {help} (default {default})") };
        cmd = cmd.arg(Arg::new(key).long(key).value_name("VALUE").allow_negative_numbers(true).action(ArgAction::Set).help(help));
    }
    cmd
}

/// Why [`resolve`] did not produce a configuration.
#[derive(Debug)]
pub enum ResolveError {
    /// `--help` or `--version`: print the text and exit successfully.
    Info(String),
    /// Bad flags, config file or values.
    Invalid(String),
}

impl std::fmt::Display for ResolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResolveError::Info(s) | ResolveError::Invalid(s) => f.write_str(s.trim_end()),
        }
    }
}

/// Resolves the configuration from command-line arguments (without the
/// program name): defaults, then the config file, then flags.
pub fn resolve(args: &[String]) -> Result<RunConfig, ResolveError> {
    use clap::error::ErrorKind;
    let matches = cli().try_get_matches_from(std::iter::once("qspin".to_string()).chain(args.iter().cloned())).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ResolveError::Info(e.render().to_string()),
        _ => ResolveError::Invalid(e.render().to_string()),
    })?;
    let invalid = |e: ConfigError| ResolveError::Invalid(format!("error: {e}"));
    let name: &String = matches.get_one("command").expect("required");
    let command = Command::parse(name).expect("value parser restricts names");
    let mut cfg = RunConfig::defaults(command);
    let default_out = cfg.output.out.clone();
    if let Some(path) = matches.get_one::<String>("config") {
        cfg.apply_file(Path::new(path)).map_err(invalid)?;
    }
    for &(_, key, _, _) in config::KEYS {
        if let Some(v) = matches.get_one::<String>(key) {
            cfg.set(None, key, v).map_err(|mut e| {
                e.origin = Some(config::Origin::Flag);
                invalid(e)
            })?;
        }
    }
    if cfg.output.out == default_out {
        cfg.output.out.set_extension(cfg.output.format.extension());
    }
    cfg.validate().map_err(invalid)?;
    Ok(cfg)
}

fn to_json_map(pairs: Vec<(String, Value)>) -> Value {
    Value::Object(pairs.into_iter().collect::<Map<_, _>>())
}

/// Builds the manifest document for a finished run.
pub fn manifest(cfg: &RunConfig, outcome: &Outcome, outputs: &[PathBuf], wall: f64, threads: usize) -> Value {
    let config = cfg
        .echo()
        .into_iter()
        .map(|(section, kv)| (section.to_string(), to_json_map(kv.into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect())))
        .collect();
    json!({
        "command": cfg.command.name(),
        "versions": {"qspin": env!("CARGO_PKG_VERSION"), "qspin-cli": env!("CARGO_PKG_VERSION")},
        "config": to_json_map(config),
        "wall_time_seconds": wall,
        "threads": threads,
        "all_passed": outcome.all_passed(),
        "assertions": outcome.assertions.iter().map(|a| json!({"name": a.name, "passed": a.passed, "detail": a.detail})).collect::<Vec<_>>(),
        "results": to_json_map(outcome.facts.clone()),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::Write(path.to_path_buf(), e))
}

/// Executes a resolved configuration, writes every artifact and returns
/// the outcome.
pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.solver.threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Config(ConfigError { origin: None, key: Some("threads".into()), message: e.to_string() }))?;
    let threads = pool.current_num_threads();
    let outcome = pool.install(|| execute(cfg))?;
    let format = cfg.output.format;
    let out = &cfg.output.out;
    let mut outputs = Vec::new();
    for (suffix, table) in &outcome.tables {
        let path = if suffix.is_empty() { out.clone() } else { side_path(out, suffix, format.extension()) };
        write_file(&path, &table.render(format))?;
        outputs.push(path);
    }
    let doc = manifest(cfg, &outcome, &outputs, start.elapsed().as_secs_f64(), threads);
    write_file(&manifest_path(out), &(serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"))?;
    Ok(outcome)
}

/// Full command-line entry point; prints a summary and returns the exit
/// code.
pub fn main_with_args(args: &[String]) -> i32 {
    let cfg = match resolve(args) {
        Ok(c) => c,
        Err(ResolveError::Info(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for a in &outcome.assertions {
                println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            println!("wrote {} and {}", cfg.output.out.display(), manifest_path(&cfg.output.out).display());
            if outcome.all_passed() {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(RunError::Solver(e)) => {
            eprintln!("error: {e}");
            EXIT_SOLVER
        }
        Err(RunError::Write(path, e)) => {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_WRITE
        }
    }
}
