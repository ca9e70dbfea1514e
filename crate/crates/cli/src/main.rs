#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracsrc::mittag_leffler::{inject_series_fault, ml_with_route, MLParams};
use fracsrc::{Error, Result};
use fracsrc_cli::commands::{self, ProblemKind};
use fracsrc_cli::config::{preset, ExperimentConfig};
use fracsrc_cli::{io, verify};
use num_complex::Complex64;

/// Forward simulation and source reconstruction for time-fractional
/// diffusion from boundary flux.
#[derive(Parser)]
#[command(name = "fracsrc", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration instead of a file.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory, overriding the configured one.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for synthetic noise, overriding the configured one.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Number of eigenmodes, overriding the configured one.
    #[arg(long, global = true, value_name = "N")]
    modes: Option<usize>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the boundary flux `flux.csv` and `metadata.json`.
    Simulate,
    /// Reconstruct from flux data and write `result.json`.
    Reconstruct {
        #[arg(long, value_parser = ["ip1", "ip3", "ip2-test"])]
        problem: String,
    },
    /// Admissible measurement set and Hopf certificate.
    Gset,
    /// Run the invariant suite.
    Verify {
        /// Negate term N of the Mittag-Leffler series first (fault injection).
        #[arg(long, value_name = "N")]
        inject_fault: Option<usize>,
    },
    /// Evaluate E_{α,β}(z).
    #[command(hide = true)]
    MlEval {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
    },
}

fn load(common: &Common, default: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, &common.preset, default) {
        (Some(p), _, _) => ExperimentConfig::load(p)?,
        (None, Some(name), _) => preset(name)?,
        (None, None, Some(name)) => preset(name)?,
        (None, None, None) => return Err(Error::Config("either --config or --preset is required".into())),
    };
    if let Some(out) = &common.out {
        cfg.output.dir = std::env::current_dir()?.join(out);
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(modes) = common.modes {
        cfg.solver.modes = modes;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate => {
            let cfg = load(&cli.common, None)?;
            let meta = commands::simulate(&cfg)?;
            eprintln!("wrote flux.csv and metadata.json to {}", cfg.resolve(&cfg.output.dir).display());
            eprintln!("max |flux| = {}", meta["max_abs_flux"]);
        }
        Command::Reconstruct { problem } => {
            let cfg = load(&cli.common, None)?;
            let problem: ProblemKind = problem.parse()?;
            print(&commands::reconstruct(&cfg, problem)?)?;
        }
        Command::Gset => {
            let cfg = load(&cli.common, None)?;
            let doc = commands::gset(&cfg)?;
            eprintln!(
                "coverage {} flags agree {}",
                doc["report"]["coverage"], doc["report"]["flags_agree"]
            );
        }
        Command::Verify { inject_fault } => {
            let cfg = load(&cli.common, Some("minimal-1d"))?;
            if let Some(n) = inject_fault {
                inject_series_fault(n);
            }
            let report = verify::run(&cfg);
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{status} {:<40} defect {:.3e} tol {:.1e} ({:.2}s)", c.name, c.defect, c.tolerance, c.seconds);
            }
            eprintln!("total {:.1}s", report.seconds);
            let v = serde_json::to_value(&report)?;
            let dir = cfg.resolve(&cfg.output.dir);
            std::fs::create_dir_all(&dir)?;
            io::write_json(&dir.join("verify.json"), &v)?;
            print(&v)?;
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::MlEval { alpha, beta, re, im } => {
            let (v, route) = ml_with_route(MLParams::new(alpha, beta)?, Complex64::new(re, im))?;
            print(&serde_json::json!({"re": v.re, "im": v.im, "route": format!("{route:?}")}))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
