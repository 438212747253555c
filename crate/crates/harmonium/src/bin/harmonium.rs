//! Command-line sweep driver.
//!
//! Reads an optional TOML config file, applies flag overrides on top, runs
//! the coupling sweep and writes the report to `--out` or stdout.
//!
//! Exit codes: 0 on full success, 2 when some grid points failed (their rows
//! carry the error), 1 on configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use harmonium::model::Statistics;
use harmonium::sweep::{emit_report, run_sweep, ReportFormat, SweepConfig};

#[derive(Parser, Debug)]
#[command(
    name = "harmonium",
    about = "Mode entanglement sweeps for the N-Harmonium ground state"
)]
struct Cli {
    /// TOML sweep configuration; flags below override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Particle statistics: fermion or boson.
    #[arg(long)]
    statistics: Option<Statistics>,

    /// Number of particles.
    #[arg(long)]
    particles: Option<u32>,

    /// Spatial dimensions (1 or 2).
    #[arg(long)]
    dims: Option<u32>,

    /// Single target mode: comma-separated quantum numbers, one per axis.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "modes")]
    mode: Option<Vec<u32>>,

    /// Target mode pair: two spatial indices, e.g. `--modes 0,1`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    modes: Option<Vec<usize>>,

    /// Lower edge of a custom coupling grid.
    #[arg(long)]
    kappa_min: Option<f64>,

    /// Upper edge of a custom coupling grid.
    #[arg(long)]
    kappa_max: Option<f64>,

    /// Point count of a custom coupling grid.
    #[arg(long)]
    kappa_points: Option<usize>,

    /// Trap anisotropy omega_y / omega_x (two-dimensional systems).
    #[arg(long)]
    omega_ratio: Option<f64>,

    /// Super-selection columns to fill: any of parity, number.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    ssr: Option<Vec<String>>,

    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format: csv or json.
    #[arg(long)]
    format: Option<ReportFormat>,

    /// Multi-start seed for the closest-separable-state search.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for grid evaluation.
    #[arg(long)]
    workers: Option<usize>,
}

impl Cli {
    fn into_config(self) -> Result<SweepConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::from_toml_file(path).map_err(|e| e.to_string())?,
            None => SweepConfig::default(),
        };
        if let Some(v) = self.statistics {
            cfg.statistics = v;
        }
        if let Some(v) = self.particles {
            cfg.particles = v;
        }
        if let Some(v) = self.dims {
            cfg.dims = v;
        }
        if let Some(v) = self.mode {
            cfg.mode = Some(v);
            cfg.modes = None;
        }
        if let Some(v) = self.modes {
            cfg.modes = Some([v[0], v[1]]);
            cfg.mode = None;
        }
        if let Some(v) = self.kappa_min {
            cfg.kappa_min = Some(v);
        }
        if let Some(v) = self.kappa_max {
            cfg.kappa_max = Some(v);
        }
        if let Some(v) = self.kappa_points {
            cfg.kappa_points = Some(v);
        }
        if let Some(v) = self.omega_ratio {
            cfg.omega_ratio = Some(v);
        }
        if let Some(v) = self.ssr {
            cfg.ssr = v;
        }
        if let Some(v) = self.out {
            cfg.out = Some(v);
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.into_config() {
        Ok(cfg) => cfg,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };
    let outcome = match run_sweep(&cfg) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let report = emit_report(&outcome.rows, cfg.format);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &report) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{report}"),
    }
    if outcome.failures > 0 {
        eprintln!(
            "warning: {} of {} grid points failed; see the error column",
            outcome.failures,
            outcome.rows.len()
        );
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
