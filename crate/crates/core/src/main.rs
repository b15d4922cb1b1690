use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use lapfm::cli::{self, output, Fault, Scenario};
use lapfm::{selftest, Error, Result};

#[derive(Parser)]
#[command(name = "lapfm", version, about = "Factorization-method reconstruction from Laplace-domain data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble M and F, write the sign report and spectrum.
    Forward(Overrides),
    /// Run the indicator sweep and write the heatmap and metrics.
    Reconstruct(Overrides),
    /// Run the operator identity and time-domain bound checks.
    Verify {
        #[command(flatten)]
        overrides: OptionalOverrides,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Run the embedded example suite.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args)]
struct OptionalOverrides {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nodes: Option<usize>,
}

// Writes a line to stdout; a closed pipe is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn load(path: &Path, lambda: Option<f64>, seed: Option<u64>, nodes: Option<usize>) -> Result<Scenario> {
    let mut s = Scenario::load(path)?;
    if let Some(l) = lambda {
        s.spectral.lambda = l;
    }
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(n) = nodes {
        s.geometry.nodes = n;
    }
    s.validate().map_err(|e| e.context(path.display().to_string()))?;
    Ok(s)
}

fn out_dir(flag: Option<PathBuf>, s: Option<&Scenario>) -> PathBuf {
    flag.or_else(|| s.map(|s| PathBuf::from(&s.outputs.dir)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn in_context<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.context(path.display().to_string()))
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Forward(o) => {
            let s = load(&o.scenario, o.lambda, o.seed, o.nodes)?;
            let out = out_dir(o.out, Some(&s));
            let summary = in_context(&o.scenario, cli::run_forward(&s, &out))?;
            info!("forward: {} unknowns, sign {:?}", summary.boundary_unknowns, summary.sign.definiteness);
            say!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(true)
        }
        Command::Reconstruct(o) => {
            let s = load(&o.scenario, o.lambda, o.seed, o.nodes)?;
            let out = out_dir(o.out, Some(&s));
            let metrics = in_context(&o.scenario, cli::run_reconstruct(&s, &out))?;
            say!("{}", serde_json::to_string_pretty(&metrics)?);
            Ok(true)
        }
        Command::Verify { overrides: o, inject_fault } => {
            let s = match &o.scenario {
                Some(p) => Some(load(p, o.lambda, o.seed, o.nodes)?),
                None => None,
            };
            let out = out_dir(o.out, s.as_ref());
            let report = cli::run_verify(s.as_ref(), inject_fault, &out)?;
            for c in &report.checks {
                say!("{} {} value={:e} tol={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
            }
            let slack_ok = report.lemma_cells.iter().filter(|c| c.pass).count();
            say!("lemma bound: {}/{} cells", slack_ok, report.lemma_cells.len());
            Ok(report.all_pass)
        }
        Command::Selftest { out } => {
            let summary = selftest::run_selftest();
            for r in &summary.results {
                if r.pass {
                    say!("PASS {} ({:.2}s)", r.name, r.seconds);
                } else {
                    say!("FAIL {} ({:.2}s): {}", r.name, r.seconds, r.message);
                }
            }
            say!(
                "{}/{} examples passed in {:.1}s",
                summary.passed, summary.registered, summary.seconds
            );
            if let Some(dir) = out {
                output::write_json(&dir.join("selftest.json"), &summary)?;
            }
            Ok(summary.passed == summary.registered)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(n) = std::env::var("LAPFM_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => log::warn!("ignoring LAPFM_THREADS={n}"),
        }
    }
    let args = Cli::parse();
    match run(args.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
