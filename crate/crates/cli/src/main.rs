use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mr_qmem_cli::config::KEYS;
use mr_qmem_cli::{run, CliError, Command, ConfigError, RawConfig, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "mr-qmem",
    version,
    about = "Multiresonator quantum-memory simulator",
    after_help = "Any config key can be overridden with `--key value`, e.g. `--n 6 --coupling optimal`."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evolve one configuration and write the requested time series
    Simulate(Common),
    /// Scan the coupling and record the echo efficiency
    Sweep(Common),
    /// Compare closed-form, reduced and full-model amplitudes
    Compare(Common),
    /// Detect peaks of the pair energy difference
    Peaks(Common),
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Configuration file (`key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $MR_QMEM_OUT, else the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps
    #[arg(long)]
    jobs: Option<usize>,
}

type Overrides = Vec<(String, String)>;

/// Pulls `--key value` / `--key=value` pairs for config keys out of argv.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides), String> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k.to_owned(), Some(v.to_owned())),
            None => (flag.to_owned(), None),
        };
        if !KEYS.contains(&key.as_str()) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| format!("missing value for --{key}"))?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

fn execute(cmd: Cmd, overrides: &[(String, String)]) -> Result<(), CliError> {
    let (command, common) = match cmd {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::Peaks(c) => (Command::Peaks, c),
    };
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        CliError::Config(ConfigError {
            line: None,
            field: None,
            message: format!("cannot read {}: {e}", common.config.display()),
        })
    })?;
    let mut raw = RawConfig::parse(&text)?;
    for (k, v) in overrides {
        raw.set(k, v)?;
    }
    let cfg = RunConfig::from_raw(&raw)?;
    let out = common
        .out
        .or_else(|| std::env::var_os("MR_QMEM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let report = pool.install(|| run(command, &cfg, &out))?;
    for w in &report.warnings {
        eprintln!("{w}");
    }
    for line in &report.summary {
        println!("{line}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let (args, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
