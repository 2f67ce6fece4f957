// Negated comparisons reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod check;
mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use iekf::observability::Thresholds;
use iekf::sim::{self, SummaryOptions};

use config::{Config, ConfigError};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "iekf", version, about = "Invariant EKF simulations and model checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Car,
    Nav,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one or more scenarios and write a CSV and summary for each.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output directory, created if missing.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override whether sensor noise is injected.
        #[arg(long)]
        noise: Option<Switch>,
        /// Scenarios simulated in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check the structural properties of a built-in model.
    Check {
        #[arg(long, value_enum)]
        model: Model,
        /// Landmarks as `x,y;x,y` (car) or `x,y,z;...` (nav).
        #[arg(long)]
        landmarks: Option<String>,
    },
    /// Evaluate the filter stability conditions along a scenario's truth.
    Observability {
        config: PathBuf,
        /// Update epochs per window; overrides the config.
        #[arg(long)]
        window: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { configs, out, seed, noise, jobs } => cmd_run(&configs, &out, seed, noise, jobs),
        Command::Check { model, landmarks } => cmd_check(model, landmarks.as_deref()),
        Command::Observability { config, window } => cmd_observability(&config, window),
    };
    ExitCode::from(code)
}

enum RunOutcome {
    Ok,
    FilterFailure,
}

/// The outcome and summary text, or an exit code and message.
type RunResult = Result<(RunOutcome, String), (u8, String)>;

fn run_one(path: &Path, out: &Path, seed: Option<u64>, noise: Option<Switch>) -> RunResult {
    let config = Config::load(path).map_err(|e: ConfigError| (EXIT_CONFIG, e.to_string()))?;
    let name = config.name(path);
    let mut scenario = config.scenario;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(n) = noise {
        scenario.inject_noise = matches!(n, Switch::On);
    }
    let log = sim::run(&scenario).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    let summaries = sim::summarize(&log, &SummaryOptions::default());
    let text = report::summary(&name, &log, &summaries);

    let io_err = |e: std::io::Error| (EXIT_CONFIG, format!("{}: {e}", out.display()));
    let csv_path = out.join(format!("{name}.csv"));
    let file = fs::File::create(&csv_path).map_err(io_err)?;
    sim::write_csv(&log, std::io::BufWriter::new(file)).map_err(io_err)?;
    fs::write(out.join(format!("{name}_summary.txt")), &text).map_err(io_err)?;

    let failed = log.filters.iter().any(|f| f.failure.is_some());
    Ok((if failed { RunOutcome::FilterFailure } else { RunOutcome::Ok }, text))
}

fn cmd_run(configs: &[PathBuf], out: &Path, seed: Option<u64>, noise: Option<Switch>, jobs: usize) -> u8 {
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("error: {}: {e}", out.display());
        return EXIT_CONFIG;
    }
    let results: Vec<Mutex<Option<RunResult>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = configs.get(i) else { break };
                let r = run_one(path, out, seed, noise);
                *results[i].lock().expect("no panics while holding the lock") = Some(r);
            });
        }
    });

    let mut code = 0;
    for r in results {
        match r.into_inner().expect("threads joined").expect("every config ran") {
            Ok((outcome, text)) => {
                print!("{text}");
                println!();
                if matches!(outcome, RunOutcome::FilterFailure) {
                    code = code.max(EXIT_NUMERICAL);
                }
            }
            Err((c, msg)) => {
                eprintln!("error: {msg}");
                // Configuration problems take precedence in the exit code.
                code = if code == 0 || c == EXIT_CONFIG { c } else { code };
            }
        }
    }
    code
}

fn cmd_check(model: Model, landmarks: Option<&str>) -> u8 {
    let landmarks = match landmarks.map(check::parse_landmarks).transpose() {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let rows = match model {
        Model::Car => check::car(landmarks),
        Model::Nav => check::nav(landmarks),
    };
    let rows = match rows {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    println!("{:<14} {:<6} detail", "check", "result");
    for r in &rows {
        println!("{:<14} {:<6} {}", r.name, if r.pass { "pass" } else { "FAIL" }, r.detail);
    }
    if rows.iter().all(|r| r.pass) {
        0
    } else {
        EXIT_CHECK
    }
}

fn cmd_observability(path: &Path, window: Option<usize>) -> u8 {
    let config = match Config::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let window = window.unwrap_or(config.observability.window);
    let f = config.observability.floor;
    let thresholds = Thresholds { delta1: f, delta2: f, delta3: f, alpha1: f, beta1: f };
    match sim::deyst_price_report(&config.scenario, window, &thresholds) {
        Ok(r) => {
            print!("{}", report::window(&r, window, f));
            if r.all_met() {
                0
            } else {
                EXIT_CHECK
            }
        }
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            EXIT_CONFIG
        }
    }
}
