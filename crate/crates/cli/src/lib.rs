//! Command-line front end: one subcommand per experiment, a flat config
//! file, seeded runs and CSV run records.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgMatches};

use commands::{find, Command, CommandError, COMMANDS};
use config::{parse_file, ExperimentConfig, KeySpec, SEED_ENV};

/// Exit code for a run that completed but whose tested property failed.
pub const EXIT_REPORT_FAILURE: i32 = 2;
pub const EXIT_USAGE: i32 = 1;

fn key_arg(k: &KeySpec) -> Arg {
    let mut help = format!("{} [{}]", k.help, k.kind.describe());
    if let Some(d) = k.default {
        help.push_str(&format!(" (default {d})"));
    }
    Arg::new(k.name)
        .long(k.name)
        .value_name(k.kind.value_name())
        .help(help)
        .allow_hyphen_values(true)
}

fn subcommand(c: &Command) -> clap::Command {
    clap::Command::new(c.name)
        .about(c.about)
        .args(c.keys.iter().map(key_arg))
        .arg(Arg::new("config").long("config").value_name("FILE").help("key = value file; flags override it"))
        .arg(Arg::new("out").long("out").value_name("FILE").help("CSV output (default stdout)"))
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("INT")
                .help(format!("generator seed (default ${SEED_ENV}, else 0)")),
        )
        .arg(
            Arg::new("workers")
                .long("workers")
                .value_name("INT")
                .value_parser(clap::value_parser!(usize))
                .help("worker threads (0 = all cores); never changes the output"),
        )
        .arg(
            Arg::new("plot")
                .long("plot")
                .value_name("FILE")
                .requires("out")
                .help("also write a matplotlib script rendering the CSV"),
        )
}

pub fn cli() -> clap::Command {
    clap::Command::new("qal")
        .version(qal_core::VERSION)
        .about("Incomplete random variables: channel, path sums, games and quantum propagation")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(COMMANDS.iter().map(subcommand))
}

fn flags(c: &Command, m: &ArgMatches) -> Vec<(String, String)> {
    c.keys
        .iter()
        .map(|k| k.name)
        .chain(["seed"])
        .filter_map(|name| m.get_one::<String>(name).map(|v| (name.to_string(), v.clone())))
        .collect()
}

enum Failure {
    Usage(String),
    Report(String),
}

impl From<CommandError> for Failure {
    fn from(e: CommandError) -> Self {
        Self::Usage(e.to_string())
    }
}

fn execute(
    c: &Command,
    m: &ArgMatches,
    env_seed: Option<&str>,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let file = match m.get_one::<String>("config") {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            parse_file(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?
        }
        None => Vec::new(),
    };
    let cfg = ExperimentConfig::resolve(c.name, c.keys, &flags(c, m), &file, env_seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let workers = m.get_one::<usize>("workers").copied().unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Usage(format!("--workers: {e}")))?;
    let table = pool.install(|| (c.run)(&cfg))?;

    let bytes = output::render(&cfg, &table).map_err(|e| Failure::Usage(e.to_string()))?;
    match m.get_one::<String>("out") {
        Some(path) => {
            fs::write(path, &bytes).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            if let Some(script) = m.get_one::<String>("plot") {
                plot::emit_plot_script(&PathBuf::from(path), &PathBuf::from(script))
                    .map_err(|e| Failure::Usage(format!("--plot: {e}")))?;
            }
        }
        None => stdout.write_all(&bytes).map_err(|e| Failure::Usage(e.to_string()))?,
    }
    match table.failure {
        Some(f) => Err(Failure::Report(f)),
        None => Ok(()),
    }
}

/// Run with an explicit seed fallback and output streams; returns the exit
/// code.
pub fn run_with<I, S>(argv: I, env_seed: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let command = find(name).expect("clap only accepts known subcommands");
    match execute(command, sub, env_seed, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Report(msg)) => {
            let _ = writeln!(stderr, "report: {msg}");
            EXIT_REPORT_FAILURE
        }
    }
}

/// Run with the process environment and standard streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let env_seed = std::env::var(SEED_ENV).ok();
    run_with(
        argv,
        env_seed.as_deref(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
