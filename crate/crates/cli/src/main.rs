mod analyze;
mod config;
mod error;
mod records;
mod sweep;
mod theory;
mod validate;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides, Preset};
use error::{CliError, Result};
use validate::Suite;

/// Simulate two-color preferential urns, estimate tie statistics and compare
/// them with the theory.
#[derive(Debug, Parser)]
#[command(name = "urnlab", version)]
struct Cli {
    /// Experiment config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's `outputs`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of runs
    #[arg(long, global = true)]
    runs: Option<u64>,
    /// Steps per run
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Run count and horizon preset; --runs and --horizon still take precedence
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate every run and write runs.jsonl with a metadata sidecar
    Simulate,
    /// Tail curves and slope fits from the stored runs
    Analyze,
    /// Predicted tail regime, K and the duration asymptote
    Theory {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value = "1,1", value_parser = parse_x0)]
        x0: (u64, u64),
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Run a check suite; exits with status 2 if any check fails
    Validate {
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Regime table over a grid of beta and r
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.5,0.8,1,1.5,2")]
        betas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,1.2")]
        rs: Vec<f64>,
        #[arg(long, default_value = "1,1", value_parser = parse_x0)]
        x0: (u64, u64),
    },
}

fn parse_x0(s: &str) -> std::result::Result<(u64, u64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two counts as X1,X2")?;
    let n = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((n(a)?, n(b)?))
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset,
            seed: self.seed,
            runs: self.runs,
            horizon: self.horizon,
            out: self.out.clone(),
        }
    }

    fn experiment(&self, command: &str) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::config("--config", format!("{command} needs an experiment config")))?;
        ExperimentConfig::load(path, &self.overrides())
    }
}

fn emit(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(CliError::io("<stdout>"))
}

fn print_paths(paths: &[PathBuf]) -> Result<()> {
    let text: String = paths.iter().map(|p| format!("{}\n", p.display())).collect();
    emit(&text)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate => {
            let config = cli.experiment("simulate")?;
            print_paths(&[records::simulate_to_dir(&config)?])?;
        }
        Command::Analyze => {
            let config = cli.experiment("analyze")?;
            print_paths(&analyze::analyze(&config)?)?;
        }
        Command::Theory { beta, r, x0, tol, json } => {
            if !(*tol > 0.0) {
                return Err(CliError::config("--tol", "tolerance must be positive"));
            }
            let rep = theory::theory(*beta, *r, *x0, *tol);
            if *json {
                emit(&(serde_json::to_string_pretty(&rep).expect("report serializes") + "\n"))?;
            } else {
                emit(&theory::render_text(&rep))?;
            }
            if !rep.errors.is_empty() {
                return Err(CliError::Numerical(rep.errors.join("; ")));
            }
        }
        Command::Validate { suite } => {
            let scale = validate::Scale { runs: cli.runs, horizon: cli.horizon, seed: cli.seed.unwrap_or(0) };
            let checks = validate::validate(*suite, scale)?;
            let lines: String =
                checks.iter().map(|c| serde_json::to_string(c).expect("check serializes") + "\n").collect();
            emit(&lines)?;
            if let Some(dir) = &cli.out {
                records::ensure_dir(dir)?;
                let path = dir.join("validate.json");
                let mut out = records::create(&path)?;
                serde_json::to_writer_pretty(&mut out, &checks).expect("checks serialize");
                writeln!(out).and_then(|_| out.flush()).map_err(CliError::io(&path))?;
            }
            let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{}: {}", c.suite, c.check)).collect();
            if !failed.is_empty() {
                return Err(CliError::ChecksFailed(format!("{} check(s) failed: {}", failed.len(), failed.join("; "))));
            }
        }
        Command::Sweep { betas, rs, x0 } => {
            let grid = sweep::SweepGrid { betas: betas.clone(), rs: rs.clone(), x0: *x0 };
            let rows = sweep::sweep(&grid)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            print_paths(&sweep::write(&dir, &grid, &rows)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation failures; help and version succeed
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
