//! Experiment orchestration behind the `coxradar` binary.
//!
//! An experiment is one JSON document ([`ExperimentConfig`]). Every output
//! row carries the method, the seed and a hash of the effective
//! configuration, and the same configuration and seed always produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use coxradar::cityfit::{
    fit_blp_params, fit_plp_density, hourly_lambda, read_city_meta, read_congestion, read_street_curve, BlpFit,
    CongestionProfile, DEFAULT_PEAK_OCCUPANCY,
};
use coxradar::cox::write_realization_csv;
use coxradar::detection::{
    analytic_curve, empirical_mean_interferers, monte_carlo_curve, pdf_pair, power_samples, DetectionCurve,
    NetworkSpec, RadarConfig, Scenario, SweepVariable,
};
use coxradar::interference::{interval_for_line, mean_interferers_blcp, mean_interferers_plcp, write_interval_csv, RadialLimit};
use coxradar::BlpSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    /// One-line JSON report for stderr.
    pub fn report(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl From<coxradar::Error> for CliError {
    fn from(e: coxradar::Error) -> Self {
        use coxradar::Error as E;
        match e {
            E::Quadrature(_) | E::NonIdentifiable(_) => CliError::Numerical(e.to_string()),
            E::InvalidParameter { .. } | E::Input(_) | E::Csv(_) | E::Io(_) => CliError::Config(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Analytic,
    Mc,
    Both,
}

/// Sweep grid: an explicit list or `start`/`stop`/`points` (inclusive, evenly spaced).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Linspace { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Linspace { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![start],
                n => (0..n)
                    .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub grid: Grid,
}

/// Signal/interference power densities with a random target range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfConfig {
    pub range_lo: f64,
    pub range_hi: f64,
    pub samples: usize,
    pub bins: usize,
}

fn default_beta() -> f64 {
    10.0
}

fn default_realizations() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Prefix of every output file.
    pub name: String,
    #[serde(default)]
    pub radar: RadarConfig,
    pub network: NetworkSpec,
    /// Radar intensity per travel direction, m⁻¹.
    pub lambda: f64,
    #[serde(default = "default_beta")]
    pub beta_db: f64,
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default)]
    pub pdf: Option<PdfConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            radar: self.radar,
            network: self.network,
            lambda: self.lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!("name {:?} is not a valid file prefix", self.name)));
        }
        self.scenario().validate()?;
        if !self.beta_db.is_finite() {
            return Err(CliError::Config("beta_db must be finite".into()));
        }
        if let Some(sweep) = &self.sweep {
            let grid = sweep.grid.values();
            if grid.is_empty() {
                return Err(CliError::Config("sweep grid is empty".into()));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config("sweep grid must be finite and strictly increasing".into()));
            }
            for &x in &grid {
                sweep.variable.apply(&self.scenario(), x)?.validate()?;
            }
        }
        if self.method != MethodChoice::Analytic && self.n_realizations == 0 {
            return Err(CliError::Config("n_realizations must be at least 1".into()));
        }
        if let Some(p) = self.pdf {
            if !(p.range_lo > 0.0 && p.range_hi >= p.range_lo) || p.bins < 2 {
                return Err(CliError::Config("pdf: need 0 < range_lo <= range_hi and at least 2 bins".into()));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes");
    Sha256::digest(&bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Config(e.to_string()))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    sweep_value: f64,
    beta_db: f64,
    p_d_analytic: f64,
    p_d_monte_carlo: f64,
    stderr: f64,
    delta: f64,
    tolerance: f64,
    within_tolerance: bool,
    method: &'a str,
    seed: u64,
    config_hash: &'a str,
}

/// Analytic − Monte Carlo deltas with the `max(0.02, 3 SE)` agreement band.
fn write_comparison(path: &Path, analytic: &DetectionCurve, mc: &DetectionCurve, seed: u64, hash: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (a, m) in analytic.points.iter().zip(&mc.points) {
        let se = m.stderr.unwrap_or(0.0);
        let tolerance = (3.0 * se).max(0.02);
        let delta = a.p_d - m.p_d;
        w.serialize(ComparisonRow {
            sweep_value: a.x,
            beta_db: a.beta_db,
            p_d_analytic: a.p_d,
            p_d_monte_carlo: m.p_d,
            stderr: se,
            delta,
            tolerance,
            within_tolerance: delta.abs() <= tolerance,
            method: "both",
            seed,
            config_hash: hash,
        })
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_curve(path: &Path, curve: &DetectionCurve, hash: &str) -> Result<()> {
    let mut w = create(path)?;
    curve.write_csv(&mut w, hash)?;
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct PdfSummary<'a> {
    crossing_db: Option<f64>,
    samples: usize,
    interference_only_samples: usize,
    bins: usize,
    seed: u64,
    config_hash: &'a str,
}

/// Runs the sweep (and the optional power-density study) of `cfg` into `out`.
/// Returns the files written, in order.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    ensure_dir(out)?;
    let hash = cfg.hash();
    let scenario = cfg.scenario();
    let mut written = Vec::new();

    if let Some(sweep) = &cfg.sweep {
        let grid = sweep.grid.values();
        let analytic = match cfg.method {
            MethodChoice::Analytic | MethodChoice::Both => {
                Some(analytic_curve(&scenario, sweep.variable, &grid, cfg.beta_db)?)
            }
            MethodChoice::Mc => None,
        };
        let mc = match cfg.method {
            MethodChoice::Mc | MethodChoice::Both => Some(monte_carlo_curve(
                &scenario,
                sweep.variable,
                &grid,
                cfg.beta_db,
                cfg.n_realizations,
                cfg.seed,
            )?),
            MethodChoice::Analytic => None,
        };
        if let Some(a) = &analytic {
            let path = out.join(format!("{}_analytic.csv", cfg.name));
            write_curve(&path, a, &hash)?;
            written.push(path);
        }
        if let Some(m) = &mc {
            let path = out.join(format!("{}_monte_carlo.csv", cfg.name));
            write_curve(&path, m, &hash)?;
            written.push(path);
        }
        if let (Some(a), Some(m)) = (&analytic, &mc) {
            let path = out.join(format!("{}_comparison.csv", cfg.name));
            write_comparison(&path, a, m, cfg.seed, &hash)?;
            written.push(path);
        }
    }

    if let Some(p) = cfg.pdf {
        let (total, interference) = power_samples(&scenario, p.range_lo, p.range_hi, p.samples, cfg.seed)?;
        let pair = pdf_pair(&total, &interference, p.bins)?;
        let path = out.join(format!("{}_pdf.csv", cfg.name));
        let mut w = create(&path)?;
        pair.write_csv(&mut w)?;
        w.flush().map_err(io_err(&path))?;
        written.push(path);
        let path = out.join(format!("{}_pdf_summary.json", cfg.name));
        write_json(
            &path,
            &PdfSummary {
                crossing_db: pair.crossing,
                samples: total.len(),
                interference_only_samples: interference.len(),
                bins: p.bins,
                seed: cfg.seed,
                config_hash: &hash,
            },
        )?;
        written.push(path);
    }

    if written.is_empty() {
        return Err(CliError::Config("configuration has neither a sweep nor a pdf block".into()));
    }
    Ok(written)
}

/// Vehicle positions of one Palm realization.
pub fn run_sample(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    ensure_dir(out)?;
    let net = cfg.scenario().realize(0, cfg.seed)?;
    let path = out.join(format!("{}_realization.csv", cfg.name));
    let mut w = create(&path)?;
    write_realization_csv(&net, &mut w)?;
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

#[derive(Serialize)]
struct InterfererSummary<'a> {
    model: &'a str,
    analytic_mean: f64,
    /// BLCP only: `λ (avg over r ≤ R_k)^{n_B}`, without the ego street.
    as_printed_mean: Option<f64>,
    /// `log10` of the same, finite where the mean itself overflows.
    as_printed_log10: Option<f64>,
    empirical_mean: f64,
    empirical_stderr: f64,
    n_realizations: usize,
    seed: u64,
    config_hash: &'a str,
}

/// Interfering intervals on every street of one realization, and the mean
/// interferer count by closed form and by simulation.
pub fn run_interferers(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    ensure_dir(out)?;
    let hash = cfg.hash();
    let scenario = cfg.scenario();
    let beam = cfg.radar.beam()?;
    let net = scenario.realize(0, cfg.seed)?;
    let mut rows = Vec::new();
    for line in net.crossing_lines() {
        match interval_for_line(line, net.r0(), beam)? {
            Some((d, iv)) => rows.push((line.theta, d, iv)),
            None => rows.push((
                line.theta,
                f64::NAN,
                coxradar::interference::InterferenceInterval {
                    a: 0.0,
                    b: 0.0,
                    empty: true,
                    case: coxradar::IntervalCase::Parallel,
                },
            )),
        }
    }
    let intervals = out.join(format!("{}_intervals.csv", cfg.name));
    let mut w = create(&intervals)?;
    write_interval_csv(rows, &mut w)?;
    w.flush().map_err(io_err(&intervals))?;

    let r = &cfg.radar;
    let (model, analytic_mean, as_printed) = match cfg.network {
        NetworkSpec::Plcp { lambda_l } => (
            "PLCP",
            mean_interferers_plcp(cfg.lambda, lambda_l, beam, r.target_range, r.ego_street)?,
            None,
        ),
        NetworkSpec::Blcp { n_b, r_g, r0 } => {
            let m = mean_interferers_blcp(
                r0,
                cfg.lambda,
                beam,
                r.target_range,
                r.ego_street,
                &BlpSpec { n_b, r_g },
                RadialLimit::BeamRange,
            )?;
            let log10 = cfg.lambda.log10() + n_b as f64 * m.printed_average.log10();
            ("BLCP", m.corrected + m.ego_street, Some((m.as_printed, log10)))
        }
    };
    let n = cfg.n_realizations.max(2);
    let (empirical_mean, empirical_stderr) = empirical_mean_interferers(&scenario, n, cfg.seed)?;
    let summary = out.join(format!("{}_interferers.json", cfg.name));
    write_json(
        &summary,
        &InterfererSummary {
            model,
            analytic_mean,
            as_printed_mean: as_printed.map(|p| p.0),
            as_printed_log10: as_printed.map(|p| p.1),
            empirical_mean,
            empirical_stderr,
            n_realizations: n,
            seed: cfg.seed,
            config_hash: &hash,
        },
    )?;
    Ok(vec![intervals, summary])
}

/// Detection settings for the per-city hourly study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HourlyConfig {
    pub radar_plcp: RadarConfig,
    pub radar_blcp: RadarConfig,
    pub beta_db: f64,
    /// Outskirts ego offset as a multiple of the fitted `R_g`.
    pub outskirts_factor: f64,
    pub peak_occupancy_fraction: f64,
}

impl Default for HourlyConfig {
    fn default() -> Self {
        Self {
            radar_plcp: RadarConfig::default(),
            radar_blcp: RadarConfig::blcp_default(),
            beta_db: 10.0,
            outskirts_factor: 2.0,
            peak_occupancy_fraction: DEFAULT_PEAK_OCCUPANCY,
        }
    }
}

impl HourlyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path).map_err(io_err(path))?)
            .map_err(|e: serde_json::Error| CliError::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CityFit {
    pub lambda_l_hat: f64,
    pub blp: BlpFit,
    pub lambda_max_hat: f64,
    pub hourly_lambda: Vec<f64>,
}

fn read_file(path: &Path) -> Result<File> {
    File::open(path).map_err(io_err(path))
}

/// Subdirectories of `data` holding a `street_curve.csv`, sorted by name.
fn city_dirs(data: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(data).map_err(io_err(data))? {
        let entry = entry.map_err(io_err(data))?;
        let path = entry.path();
        if path.join("street_curve.csv").is_file() {
            dirs.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    if dirs.is_empty() {
        return Err(CliError::Config(format!(
            "{} contains no city directory with a street_curve.csv",
            data.display()
        )));
    }
    dirs.sort();
    Ok(dirs)
}

/// Fits every city under `data`.
pub fn fit_cities(data: &Path, hourly: &HourlyConfig) -> Result<BTreeMap<String, CityFit>> {
    let mut fits = BTreeMap::new();
    for (name, dir) in city_dirs(data)? {
        let context = |e: CliError| match e {
            CliError::Config(m) => CliError::Config(format!("{name}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{name}: {m}")),
            other => other,
        };
        let curve = read_street_curve(read_file(&dir.join("street_curve.csv"))?)
            .map_err(CliError::from)
            .map_err(context)?;
        let meta = read_city_meta(read_file(&dir.join("city_meta.csv"))?)
            .map_err(CliError::from)
            .map_err(context)?;
        let congestion = read_congestion(read_file(&dir.join("congestion.csv"))?)
            .map_err(CliError::from)
            .map_err(context)?;
        let blp = fit_blp_params(&curve).map_err(CliError::from).map_err(context)?;
        let profile = CongestionProfile {
            congestion,
            c_max: None,
            lambda_max: None,
            fleet_size: meta.fleet_size,
            road_length_total: meta.road_length_m,
            peak_occupancy_fraction: hourly.peak_occupancy_fraction,
        };
        fits.insert(
            name,
            CityFit {
                lambda_l_hat: fit_plp_density(meta.street_density_per_area)?,
                blp,
                lambda_max_hat: profile.lambda_max()?,
                hourly_lambda: hourly_lambda(&profile)?,
            },
        );
    }
    Ok(fits)
}

#[derive(Serialize)]
struct HourlyRow<'a> {
    city: &'a str,
    hour: usize,
    lambda: f64,
    p_d_plcp: f64,
    p_d_blcp_center: f64,
    p_d_blcp_outskirts: f64,
    method: &'a str,
    config_hash: &'a str,
}

/// Fits every city under `data`, writes `fits.json`, and, with
/// `with_hourly`, the analytic hourly detection probabilities `hourly.csv`.
pub fn run_cityfit(data: &Path, out: &Path, hourly: &HourlyConfig, with_hourly: bool) -> Result<Vec<PathBuf>> {
    hourly.radar_plcp.validate()?;
    hourly.radar_blcp.validate()?;
    ensure_dir(out)?;
    let fits = fit_cities(data, hourly)?;
    let hash = config_hash(&(hourly, &fits.keys().collect::<Vec<_>>()));
    let fits_path = out.join("fits.json");
    write_json(&fits_path, &fits)?;
    let mut written = vec![fits_path];
    if with_hourly {
        let path = out.join("hourly.csv");
        let mut w = csv::Writer::from_writer(create(&path)?);
        for (city, fit) in &fits {
            let blp = BlpSpec {
                n_b: fit.blp.n_b,
                r_g: fit.blp.r_g,
            };
            let outskirts = hourly.outskirts_factor * fit.blp.r_g;
            for (hour, &lambda) in fit.hourly_lambda.iter().enumerate() {
                let plcp = coxradar::detection::p_d_plcp(hourly.beta_db, &hourly.radar_plcp, fit.lambda_l_hat, lambda)?;
                let center = coxradar::detection::p_d_blcp(0.0, hourly.beta_db, &hourly.radar_blcp, &blp, lambda)?;
                let edge = coxradar::detection::p_d_blcp(outskirts, hourly.beta_db, &hourly.radar_blcp, &blp, lambda)?;
                w.serialize(HourlyRow {
                    city,
                    hour,
                    lambda,
                    p_d_plcp: plcp,
                    p_d_blcp_center: center,
                    p_d_blcp_outskirts: edge,
                    method: "analytic",
                    config_hash: &hash,
                })
                .map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
