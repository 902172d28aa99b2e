use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dsaddle::bench::{self, ExperimentConfig, Mode, RunOutput};
use dsaddle::Result;

/// Block preconditioners for double saddle-point systems.
///
/// Any configuration field can be overridden with a dotted flag, e.g.
/// `--solver.restart 30` or `--instance.kind=stokes-darcy`.
#[derive(Parser, Debug)]
#[command(name = "dsaddle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV and JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for random instances and perturbations.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for table cells; 0 uses all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run spectral classification suites.
    Validate,
    /// Dump eigenvalues of the preconditioned matrix.
    Eig,
    /// Solve one system with preconditioned GMRES or MINRES.
    Solve,
    /// Iteration counts over a Stokes-Darcy parameter grid.
    Table,
    /// Write the configured system as Matrix Market files.
    ExportMtx,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Validate => Mode::Validate,
            Command::Eig => Mode::Eig,
            Command::Solve => Mode::Solve,
            Command::Table => Mode::Table,
            Command::ExportMtx => Mode::ExportMtx,
        }
    }
}

/// Config sections that can be replaced whole, e.g. `--solver '{"tol": 1e-8}'`.
const SECTIONS: [&str; 6] = ["instance", "preconditioner", "solver", "validate", "table", "output"];

/// Pulls `--a.b value` and `--a.b=value` pairs, and whole-section flags, out
/// of `args`.
fn split_overrides(args: Vec<String>) -> std::result::Result<(Vec<String>, Vec<(String, String)>), String> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !key.contains('.') && !SECTIONS.contains(&key.as_str()) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| format!("override --{key} needs a value"))?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

fn resolve(cli: &Cli, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::resolve(cli.config.as_deref(), overrides)?;
    cfg.mode = cli.command.mode();
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut out = bench::run(cfg)?;
    match &cfg.output.dir {
        Some(dir) => out.write_to(dir)?,
        // without a directory the eigenvalue CSV goes to stdout for piping
        None if cfg.mode == Mode::Eig => {
            out.text = out.file("eig.csv").unwrap_or_default().to_string();
        }
        None => {}
    }
    Ok(out)
}

fn main() -> ExitCode {
    let (args, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(split) => split,
        Err(msg) => {
            eprintln!("error: {msg}");
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
    let cfg = match resolve(&cli, &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = execute(&cfg);
    match &result {
        Ok(out) => {
            print!("{}", out.text);
            if !out.pass {
                eprintln!("FAIL");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(bench::exit_code(&result))
}
