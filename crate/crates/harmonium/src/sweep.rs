//! Deterministic coupling sweeps with CSV and JSON emission.
//!
//! A [`SweepConfig`] names a system (statistics, particle count, trap
//! geometry), a target (one mode or a mode pair) and a coupling grid. The
//! sweep evaluates the entanglement measures at every grid point, records
//! per-point failures without aborting, and emits the rows in grid order so
//! that the same configuration always produces byte-identical output.
//!
//! ```
//! use harmonium::sweep::{SweepConfig, run_sweep, emit_report, ReportFormat};
//!
//! let cfg = SweepConfig {
//!     kappa_min: Some(0.5),
//!     kappa_max: Some(2.0),
//!     kappa_points: Some(3),
//!     ..SweepConfig::default()
//! };
//! let out = run_sweep(&cfg).unwrap();
//! assert_eq!(out.rows.len(), 3);
//! let csv = emit_report(&out.rows, ReportFormat::Csv);
//! assert!(csv.starts_with("kappa,"));
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::entanglement::{
    boson_mode_entanglement, spinful_mode_measures, two_mode_report_seeded, ModeMeasures,
    ProductSplit, OPTIMIZER_SEED,
};
use crate::model::{FieldRegime, HarmoniumSpec, Statistics};
use crate::rdm::{
    boson_mode_rdm, boson_two_mode_rdm, fermion_two_mode_rdm, ExpectationEngine,
};

/// Output format for [`emit_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// Declarative sweep description. Loadable from a TOML file; every field has
/// a default so a config may specify only what it overrides.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub statistics: Statistics,
    pub particles: u32,
    pub dims: u32,
    /// Quantum numbers of the single target mode, one entry per axis.
    pub mode: Option<Vec<u32>>,
    /// Spatial indices of a target mode pair (one-dimensional systems).
    pub modes: Option<[usize; 2]>,
    /// Custom coupling grid bounds; when absent the default grid is used.
    pub kappa_min: Option<f64>,
    pub kappa_max: Option<f64>,
    pub kappa_points: Option<usize>,
    /// Trap anisotropy `ω_y/ω_x` (two-dimensional systems).
    pub omega_ratio: Option<f64>,
    /// Which super-selection columns to fill: any of "parity", "number".
    pub ssr: Vec<String>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    /// Multi-start seed for the closest-separable-state search.
    pub seed: u64,
    /// Worker threads for grid evaluation; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            statistics: Statistics::Fermion,
            particles: 3,
            dims: 1,
            mode: Some(vec![0]),
            modes: None,
            kappa_min: None,
            kappa_max: None,
            kappa_points: None,
            omega_ratio: None,
            ssr: vec!["parity".into(), "number".into()],
            out: None,
            format: ReportFormat::Csv,
            seed: OPTIMIZER_SEED,
            workers: None,
        }
    }
}

/// Configuration rejected before any evaluation starts.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("exactly one of `mode` and `modes` must be set")]
    TargetAmbiguous,
    #[error("mode labels need {dims} quantum numbers, got {got}")]
    ModeRank { dims: u32, got: usize },
    #[error("mode pair indices must differ")]
    EqualPair,
    #[error("dims must be 1 or 2, got {0}")]
    BadDims(u32),
    #[error("two-dimensional sweeps need `omega_ratio`")]
    MissingRatio,
    #[error("custom grids need kappa_min, kappa_max and kappa_points together")]
    PartialGrid,
    #[error("kappa grid bounds must satisfy -1 < min <= max")]
    BadGridBounds,
    #[error("unknown ssr entry '{0}' (expected parity or number)")]
    BadSsr(String),
    #[error("mode pairs are only supported in one dimension")]
    PairNeedsOneDim,
}

impl SweepConfig {
    /// Parses a TOML config file.
    pub fn from_toml_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    /// Rejects inconsistent targets, geometries and grids up front.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=2).contains(&self.dims) {
            return Err(ConfigError::BadDims(self.dims));
        }
        match (&self.mode, &self.modes) {
            (Some(_), Some(_)) | (None, None) => return Err(ConfigError::TargetAmbiguous),
            (Some(mu), None) => {
                if mu.len() != self.dims as usize {
                    return Err(ConfigError::ModeRank {
                        dims: self.dims,
                        got: mu.len(),
                    });
                }
            }
            (None, Some(pair)) => {
                if pair[0] == pair[1] {
                    return Err(ConfigError::EqualPair);
                }
                if self.dims != 1 {
                    return Err(ConfigError::PairNeedsOneDim);
                }
            }
        }
        if self.dims == 2 && self.omega_ratio.is_none() {
            return Err(ConfigError::MissingRatio);
        }
        let given = [
            self.kappa_min.is_some(),
            self.kappa_max.is_some(),
            self.kappa_points.is_some(),
        ];
        if given.iter().any(|&g| g) && !given.iter().all(|&g| g) {
            return Err(ConfigError::PartialGrid);
        }
        if let (Some(lo), Some(hi)) = (self.kappa_min, self.kappa_max) {
            if !(lo > -1.0 && lo <= hi) {
                return Err(ConfigError::BadGridBounds);
            }
        }
        for s in &self.ssr {
            if s != "parity" && s != "number" {
                return Err(ConfigError::BadSsr(s.clone()));
            }
        }
        Ok(())
    }

    /// The coupling grid, ascending. Custom bounds give a log-spaced grid
    /// when fully positive and a linear grid otherwise. The default grid is
    /// 9 linear points in `[-0.9, -0.1]` followed by 41 log points spanning
    /// `[1e-2, 1e5]`.
    pub fn kappa_grid(&self) -> Vec<f64> {
        if let (Some(lo), Some(hi), Some(n)) = (self.kappa_min, self.kappa_max, self.kappa_points) {
            return if lo > 0.0 {
                log_grid(lo, hi, n)
            } else {
                linear_grid(lo, hi, n)
            };
        }
        let mut grid = linear_grid(-0.9, -0.1, 9);
        grid.extend(log_grid(1e-2, 1e5, 41));
        grid
    }
}

fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + step * k as f64).collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|k| (a + step * k as f64).exp()).collect()
}

/// One evaluated grid point. Value columns are `None` when the point failed
/// or the column does not apply; all entropic quantities are in nats.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub omega_ratio: Option<f64>,
    pub i_nats: Option<f64>,
    pub e_nats: Option<f64>,
    /// True when the entanglement value is exact rather than a PPT lower
    /// bound.
    pub e_exact: Option<bool>,
    pub e_parity_nats: Option<f64>,
    pub e_number_nats: Option<f64>,
    /// Classical correlation left in the closest separable state; mode
    /// pairs only.
    pub c_nats: Option<f64>,
    pub e_parity_frac: Option<f64>,
    pub e_number_frac: Option<f64>,
    pub error: Option<String>,
}

/// All rows of a sweep plus the count of failed points.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub failures: usize,
}

fn failed_row(cfg: &SweepConfig, kappa: f64, message: String) -> SweepRow {
    SweepRow {
        kappa,
        omega_ratio: cfg.omega_ratio,
        i_nats: None,
        e_nats: None,
        e_exact: None,
        e_parity_nats: None,
        e_number_nats: None,
        c_nats: None,
        e_parity_frac: None,
        e_number_frac: None,
        error: Some(message),
    }
}

fn ratio(part: f64, whole: f64) -> Option<f64> {
    (whole > 1e-300).then(|| part / whole)
}

fn measures_row(cfg: &SweepConfig, kappa: f64, m: &ModeMeasures) -> SweepRow {
    let parity = cfg.ssr.iter().any(|s| s == "parity");
    let number = cfg.ssr.iter().any(|s| s == "number");
    SweepRow {
        kappa,
        omega_ratio: cfg.omega_ratio,
        i_nats: Some(m.i),
        e_nats: Some(m.e),
        e_exact: Some(true),
        e_parity_nats: parity.then_some(m.e_parity),
        e_number_nats: number.then_some(m.e_number),
        c_nats: None,
        e_parity_frac: parity.then(|| ratio(m.e_parity, m.e)).flatten(),
        e_number_frac: number.then(|| ratio(m.e_number, m.e)).flatten(),
        error: None,
    }
}

fn build_spec(cfg: &SweepConfig, kappa: f64) -> HarmoniumSpec {
    let regime = match (cfg.statistics, cfg.dims) {
        (Statistics::Fermion, 1) => FieldRegime::WeakField,
        _ => FieldRegime::StrongField,
    };
    let n = cfg.particles as usize;
    match cfg.dims {
        1 => HarmoniumSpec::one_dimensional(n, kappa, cfg.statistics, regime),
        _ => HarmoniumSpec::two_dimensional(
            n,
            cfg.omega_ratio.unwrap_or(1.0),
            kappa,
            cfg.statistics,
            regime,
        ),
    }
}

fn evaluate_point(cfg: &SweepConfig, kappa: f64) -> SweepRow {
    match try_evaluate_point(cfg, kappa) {
        Ok(row) => row,
        Err(message) => failed_row(cfg, kappa, message),
    }
}

fn try_evaluate_point(cfg: &SweepConfig, kappa: f64) -> Result<SweepRow, String> {
    let state = build_spec(cfg, kappa)
        .build_ground_state()
        .map_err(|e| e.to_string())?;
    if let Some(mu) = &cfg.mode {
        let weights = match cfg.statistics {
            Statistics::Fermion => {
                let engine = ExpectationEngine::new(&state);
                engine.mode_weights(mu).map_err(|e| e.to_string())?
            }
            Statistics::Boson => {
                if cfg.dims != 1 {
                    return Err("bosonic mode sweeps are one-dimensional only".into());
                }
                boson_mode_rdm(&state, mu[0] as usize).map_err(|e| e.to_string())?
            }
        };
        let m = match cfg.statistics {
            Statistics::Fermion => spinful_mode_measures(&weights),
            Statistics::Boson => boson_mode_entanglement(&weights),
        };
        return Ok(measures_row(cfg, kappa, &m));
    }
    let [i, j] = cfg.modes.expect("validated target");
    let (rho, split) = match cfg.statistics {
        Statistics::Fermion => (
            fermion_two_mode_rdm(&state, i, j).map_err(|e| e.to_string())?,
            ProductSplit::fermion_spinful(),
        ),
        Statistics::Boson => (
            boson_two_mode_rdm(&state, i, j).map_err(|e| e.to_string())?,
            ProductSplit::boson(cfg.particles as usize),
        ),
    };
    let report =
        two_mode_report_seeded(&rho.matrix, &split, cfg.seed).map_err(|e| e.to_string())?;
    let parity = cfg.ssr.iter().any(|s| s == "parity");
    let number = cfg.ssr.iter().any(|s| s == "number");
    Ok(SweepRow {
        kappa,
        omega_ratio: cfg.omega_ratio,
        i_nats: Some(report.mutual_information),
        e_nats: Some(report.entanglement),
        e_exact: Some(report.exact),
        e_parity_nats: parity.then_some(report.e_parity),
        e_number_nats: number.then_some(report.e_number),
        c_nats: Some(report.classical_correlation),
        e_parity_frac: parity
            .then(|| ratio(report.e_parity, report.entanglement))
            .flatten(),
        e_number_frac: number
            .then(|| ratio(report.e_number, report.entanglement))
            .flatten(),
        error: None,
    })
}

/// Evaluates the whole grid. Points run in parallel; the returned rows are
/// in grid order regardless of scheduling, and per-point failures land in
/// the `error` column instead of aborting the sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, ConfigError> {
    cfg.validate()?;
    let grid = cfg.kappa_grid();
    let eval = || {
        use rayon::prelude::*;
        grid.par_iter()
            .map(|&k| evaluate_point(cfg, k))
            .collect::<Vec<_>>()
    };
    let rows = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(eval),
        None => eval(),
    };
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(SweepOutcome { rows, failures })
}

const CSV_HEADER: &str = "kappa,omega_ratio,i_nats,e_nats,e_exact,e_parity_nats,e_number_nats,\
c_nats,e_parity_frac,e_number_frac,error";

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt_sig12(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Renders rows in the chosen format. Both formats are deterministic down to
/// the byte: fixed column order, `.` decimal separator, 12 significant
/// digits, trailing newline.
pub fn emit_report(rows: &[SweepRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in rows {
                let fields = [
                    sig12(r.kappa),
                    opt_sig12(r.omega_ratio),
                    opt_sig12(r.i_nats),
                    opt_sig12(r.e_nats),
                    r.e_exact.map(|b| b.to_string()).unwrap_or_default(),
                    opt_sig12(r.e_parity_nats),
                    opt_sig12(r.e_number_nats),
                    opt_sig12(r.c_nats),
                    opt_sig12(r.e_parity_frac),
                    opt_sig12(r.e_number_frac),
                    r.error.as_deref().map(csv_quote).unwrap_or_default(),
                ];
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(rows).expect("serializable rows");
            out.push('\n');
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode_cfg() -> SweepConfig {
        SweepConfig {
            kappa_min: Some(0.5),
            kappa_max: Some(2.0),
            kappa_points: Some(3),
            ..SweepConfig::default()
        }
    }

    #[test]
    fn default_grid_shape() {
        let grid = SweepConfig::default().kappa_grid();
        assert_eq!(grid.len(), 50);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_relative(grid[0], -0.9);
        assert_relative(grid[8], -0.1);
        assert_relative(grid[9], 1e-2);
        assert_relative(grid[49], 1e5);
    }

    fn assert_relative(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn custom_log_grid() {
        let cfg = single_mode_cfg();
        let grid = cfg.kappa_grid();
        assert_eq!(grid.len(), 3);
        assert_relative(grid[0], 0.5);
        assert_relative(grid[1], 1.0);
        assert_relative(grid[2], 2.0);
    }

    #[test]
    fn validation_rejects_ambiguous_target() {
        let mut cfg = SweepConfig::default();
        cfg.modes = Some([0, 1]);
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::TargetAmbiguous)
        ));
        cfg.mode = None;
        assert!(cfg.validate().is_ok());
        cfg.modes = Some([2, 2]);
        assert!(matches!(cfg.validate(), Err(ConfigError::EqualPair)));
    }

    #[test]
    fn validation_rejects_partial_grid() {
        let mut cfg = SweepConfig::default();
        cfg.kappa_min = Some(0.1);
        assert!(matches!(cfg.validate(), Err(ConfigError::PartialGrid)));
    }

    #[test]
    fn toml_round_trip() {
        let text = "statistics = \"boson\"\nparticles = 4\nmode = [1]\nseed = 7\n";
        let cfg: SweepConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.statistics, Statistics::Boson);
        assert_eq!(cfg.particles, 4);
        assert_eq!(cfg.seed, 7);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn single_mode_sweep_rows_are_ordered_and_clean() {
        let cfg = single_mode_cfg();
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.failures, 0);
        assert_eq!(out.rows.len(), 3);
        assert!(out.rows.windows(2).all(|w| w[0].kappa < w[1].kappa));
        for r in &out.rows {
            assert!(r.e_nats.unwrap() > 0.0);
            assert!(r.e_number_nats.unwrap() <= r.e_parity_nats.unwrap() + 1e-12);
        }
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let mut cfg = single_mode_cfg();
        cfg.particles = 9;
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.failures, 3);
        assert!(out.rows.iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn csv_is_byte_stable() {
        let cfg = single_mode_cfg();
        let a = emit_report(&run_sweep(&cfg).unwrap().rows, ReportFormat::Csv);
        let b = emit_report(&run_sweep(&cfg).unwrap().rows, ReportFormat::Csv);
        assert_eq!(a, b);
        assert!(a.starts_with("kappa,omega_ratio,"));
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn json_has_same_field_names() {
        let cfg = single_mode_cfg();
        let rows = run_sweep(&cfg).unwrap().rows;
        let json = emit_report(&rows, ReportFormat::Json);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let first = &parsed[0];
        for key in ["kappa", "i_nats", "e_nats", "e_parity_frac", "error"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }
}
