use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kaclab_lab::config::{parse_config, validate_config};
use kaclab_lab::experiment::{default_output, load_reports, render_plots, run_to_dir, RunSummary};
use kaclab_lab::manifest::RunManifest;
use kaclab_lab::{LabError, LabResult};

/// Boltzmann-Kac simulation and chaos-measurement lab.
///
/// Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
/// Set KACLAB_WORKERS to bound the number of worker threads; results do not
/// depend on it.
#[derive(Parser)]
#[command(name = "kaclab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment, resuming if the output directory holds a partial run.
    Run {
        config: PathBuf,
        /// Output directory (default: `output` from the config, else runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration file and report every problem found.
    Validate { config: PathBuf },
    /// Print the summary of a finished run and redraw its plots.
    Report { run_dir: PathBuf },
    /// Rerun from a manifest and compare the result files byte for byte.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_workers() -> LabResult<()> {
    let Ok(v) = std::env::var("KACLAB_WORKERS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| LabError::Runtime(format!("KACLAB_WORKERS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| LabError::Runtime(e.to_string()))
}

fn print_summary(s: &RunSummary) {
    println!("{} ({})", s.name, s.kind.name());
    for r in &s.rows {
        println!("  N={:<6} {:<18} t={:<8} {:.6e} ± {:.2e}", r.n, r.quantity, r.time, r.value, r.stderr);
    }
    if let Some(f) = &s.rate_fit {
        println!("  slope {:.4} [{:.4}, {:.4}] at level {}", f.slope, f.ci.0, f.ci.1, f.level);
    }
    for c in &s.checks {
        println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    for n in &s.notes {
        println!("  note: {n}");
    }
}

fn run(config: &Path, out: Option<PathBuf>) -> LabResult<()> {
    let text = std::fs::read_to_string(config)?;
    let cfg = validate_config(config)?;
    let dir = out.unwrap_or_else(|| default_output(&cfg));
    let (_, summary) = run_to_dir(&cfg, &text, &dir)?;
    print_summary(&summary);
    println!("results in {}", dir.display());
    Ok(())
}

fn report(dir: &Path) -> LabResult<()> {
    let manifest = RunManifest::read(dir)?;
    let cfg = parse_config(&manifest.config)?;
    let mut summary: RunSummary = serde_json::from_slice(&std::fs::read(dir.join("summary.json"))?)?;
    let reports = load_reports(dir, &manifest)?;
    render_plots(&cfg, &reports, &mut summary, dir);
    print_summary(&summary);
    Ok(())
}

fn replay(manifest_path: &Path, out: Option<PathBuf>) -> LabResult<()> {
    let manifest = RunManifest::read(manifest_path)?;
    let src = if manifest_path.is_dir() {
        manifest_path.to_path_buf()
    } else {
        manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    let cfg = parse_config(&manifest.config)?;
    let dir = out.unwrap_or_else(|| src.join("replay"));
    let (fresh, _) = run_to_dir(&cfg, &manifest.config, &dir)?;
    let mut differing = Vec::new();
    for file in &manifest.results {
        let a = std::fs::read(src.join(file)).ok();
        let b = std::fs::read(dir.join(file)).ok();
        if a.is_none() || a != b {
            differing.push(file.clone());
        }
    }
    if fresh.results != manifest.results {
        differing.push("(list of result files)".into());
    }
    if differing.is_empty() {
        println!("replay identical: {} result files match ({})", manifest.results.len(), dir.display());
        Ok(())
    } else {
        Err(LabError::Runtime(format!("replay differs in: {}", differing.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_workers().and_then(|()| match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Validate { config } => validate_config(&config)
            .map(|c| {
                println!("{}: valid {} configuration `{}`", config.display(), c.kind.name(), c.name);
            })
            .map_err(LabError::from),
        Command::Report { run_dir } => report(&run_dir),
        Command::Replay { manifest, out } => replay(&manifest, out),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
