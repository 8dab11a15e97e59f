//! Command-line runner for the kinetic solver experiments.
//!
//! Failures print a single `error kind=<tag> message="..."` line on stderr
//! and exit with status 2.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apdg_core::harness::check::write_check_csv;
use apdg_core::harness::{
    run_accuracy_study, run_ap_sweep, run_check_suite, run_example, ExperimentConfig, ExperimentKind,
};
use apdg_core::ApdgError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "apdg", version, about = "Asymptotic-preserving DG solver for the semiconductor Boltzmann equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for CSV files; overrides `out_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent cases.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run any configured experiment.
    Run { config: PathBuf },
    /// Run a convergence study.
    Accuracy { config: PathBuf },
    /// Run the asymptotic-preserving sweep in epsilon.
    ApSweep { config: PathBuf },
    /// Run the invariant suite.
    Check,
}

fn load(path: &Path, cli: &Cli) -> Result<(ExperimentConfig, PathBuf), ApdgError> {
    let mut config = ExperimentConfig::from_file(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    Ok((config, out))
}

fn require(config: &ExperimentConfig, kind: ExperimentKind) -> Result<(), ApdgError> {
    if config.kind != kind {
        return Err(ApdgError::Experiment(format!(
            "config kind `{}` does not match the `{}` command",
            config.kind.as_str(),
            kind.as_str()
        )));
    }
    Ok(())
}

fn accuracy(config: &ExperimentConfig, out: &Path) -> Result<(), ApdgError> {
    let table = run_accuracy_study(config, Some(out))?;
    println!("n_cells  l1_error  l1_order  l2_error  l2_order  linf_error  linf_order");
    for r in &table.rows {
        let o = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        println!(
            "{:>7}  {:.2e}  {:>8}  {:.2e}  {:>8}  {:.2e}  {:>10}",
            r.n_cells,
            r.errors.l1,
            o(r.orders[0]),
            r.errors.l2,
            o(r.orders[1]),
            r.errors.linf,
            o(r.orders[2])
        );
    }
    report_files(&table.files);
    Ok(())
}

fn sweep(config: &ExperimentConfig, out: &Path) -> Result<(), ApdgError> {
    let result = run_ap_sweep(config, Some(out))?;
    println!("epsilon  l2_error");
    for r in &result.rows {
        println!("{:.2e}  {:.4e}", r.epsilon, r.errors.l2);
    }
    match result.slope {
        Some(s) => println!("slope over [{:.1e}, {:.1e}]: {s:.3}", config.fit_min, config.fit_max),
        None => println!("slope: undefined (fewer than two points in the fit window)"),
    }
    report_files(&result.files);
    Ok(())
}

fn example(config: &ExperimentConfig, out: &Path) -> Result<(), ApdgError> {
    for r in run_example(config, Some(out))? {
        let last = r.series.last().expect("series has the initial row");
        println!(
            "n_cells {}  steps {}  t {:.4e}  mass {:.12e}  min_f {:.3e}  limiter_avg_err {:.2e}",
            r.n_cells, r.steps, last.t, last.mass, r.min_f, r.max_average_error
        );
        if let Some(d) = &r.drift {
            println!("relative L2 distance to drift-diffusion: {:.3e}", d.relative_l2);
        }
        report_files(&r.files);
    }
    Ok(())
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: &Cli) -> Result<bool, ApdgError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ApdgError::InvalidParameter {
                name: "threads",
                reason: e.to_string(),
            })?;
    }
    match &cli.command {
        Command::Run { config } => {
            let (config, out) = load(config, cli)?;
            match config.kind {
                ExperimentKind::Accuracy => accuracy(&config, &out)?,
                ExperimentKind::ApSweep => sweep(&config, &out)?,
                _ => example(&config, &out)?,
            }
        }
        Command::Accuracy { config } => {
            let (config, out) = load(config, cli)?;
            require(&config, ExperimentKind::Accuracy)?;
            accuracy(&config, &out)?;
        }
        Command::ApSweep { config } => {
            let (config, out) = load(config, cli)?;
            require(&config, ExperimentKind::ApSweep)?;
            sweep(&config, &out)?;
        }
        Command::Check => {
            let outcomes = run_check_suite(cli.seed.unwrap_or(0))?;
            for o in &outcomes {
                println!(
                    "{} {}: {:.3e} (tolerance {:.0e})",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.value,
                    o.tolerance
                );
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                report_files(&[write_check_csv(dir, &outcomes)?]);
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error kind=check_failed message=\"one or more invariants failed\"");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::from(2)
        }
    }
}
