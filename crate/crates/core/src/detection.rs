//! Channel model, analytic detection probability and the Monte Carlo engine.
//!
//! The received target power is `S = γ σ_c P R^{-2α}` and each interferer
//! contributes `4π γ P h ‖w‖^{-α}`. With Swerling-I `σ_c` and Rayleigh `h`,
//! the probability that the SIR exceeds `β` factorizes over interferers into
//! `∏ 1/(1 + β' ‖w‖^{-α})` with `β' = 4πβ R^{2α}/σ̄`, whose expectation over
//! the Cox process is evaluated by nested quadrature below.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cox::{palm_condition, CoxModel, Heading, NetworkRealization, PalmConfig, VehiclePoint};
use crate::error::{require_finite, require_non_negative, require_positive, Error, Result};
use crate::geometry::{sample_blp, sample_plp, BlpSpec, PlpSpec};
use crate::interference::{
    ego_distance, ego_street_interval, integrate_crossings, interval_blcp, interval_plcp, EgoStreetSpan,
    InterferenceInterval,
};
use crate::quad::{try_integrate, Tolerance};
use crate::rng::{derive_seed, substream, Purpose};
use crate::sector::{interfering_set, Beam};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Tolerance of every analytic detection-probability integral.
pub const ANALYTIC_TOLERANCE: Tolerance = Tolerance::new(1e-8, 1e-9);

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

mod degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(rad.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d).map(f64::to_radians)
    }
}

/// Radar and link parameters. Powers and gains are in dB units as given;
/// everything is converted to linear SI by the accessor methods.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarConfig {
    /// Transmit power, dBm.
    pub p_dbm: f64,
    /// Mean radar cross-section of the target, dBsm.
    pub sigma_bar_dbsm: f64,
    pub alpha: f64,
    pub g_t_dbi: f64,
    pub g_r_dbi: f64,
    pub f_c_hz: f64,
    pub w_hz: f64,
    /// Noise spectral density, dBm/Hz.
    pub n_d_dbm_hz: f64,
    /// Half-beamwidth Ω in radians (degrees in JSON).
    #[serde(rename = "omega_deg", with = "degrees")]
    pub omega: f64,
    /// Target range R, metres.
    pub target_range: f64,
    /// Interference range R_k, metres.
    pub range: f64,
    pub ego_street: EgoStreetSpan,
    /// Adds `N = N_d W` to the Monte Carlo SINR. The analytic path is pure SIR.
    pub include_noise: bool,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            p_dbm: 10.0,
            sigma_bar_dbsm: 30.0,
            alpha: 2.0,
            g_t_dbi: 10.0,
            g_r_dbi: 10.0,
            f_c_hz: 76.5e9,
            w_hz: 25e3,
            n_d_dbm_hz: -174.0,
            omega: 7.5f64.to_radians(),
            target_range: 15.0,
            range: 500.0,
            ego_street: EgoStreetSpan::BeyondTarget,
            include_noise: false,
        }
    }
}

impl RadarConfig {
    /// Defaults with the BLCP beamwidth, Ω = 15°.
    pub fn blcp_default() -> Self {
        Self {
            omega: 15f64.to_radians(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_dbm", self.p_dbm),
            ("sigma_bar_dbsm", self.sigma_bar_dbsm),
            ("g_t_dbi", self.g_t_dbi),
            ("g_r_dbi", self.g_r_dbi),
            ("n_d_dbm_hz", self.n_d_dbm_hz),
        ] {
            require_finite(name, v)?;
        }
        require_finite("alpha", self.alpha)?;
        if self.alpha < 2.0 {
            return Err(Error::invalid("alpha", format!("must be at least 2, got {}", self.alpha)));
        }
        require_positive("f_c_hz", self.f_c_hz)?;
        require_positive("w_hz", self.w_hz)?;
        require_positive("target_range", self.target_range)?;
        self.beam().map(|_| ())?;
        if self.target_range >= self.range {
            return Err(Error::invalid("target_range", "must be smaller than the interference range"));
        }
        Ok(())
    }

    pub fn beam(&self) -> Result<Beam> {
        Beam::new(self.omega, self.range)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c_hz
    }

    /// `γ = G_t A_e / (4π)²` with effective aperture `A_e = G_r λ_c² / (4π)`.
    pub fn gamma(&self) -> f64 {
        let aperture = db_to_linear(self.g_r_dbi) * self.wavelength().powi(2) / (4.0 * PI);
        db_to_linear(self.g_t_dbi) * aperture / (16.0 * PI * PI)
    }

    pub fn power_watts(&self) -> f64 {
        dbm_to_watts(self.p_dbm)
    }

    pub fn sigma_bar(&self) -> f64 {
        db_to_linear(self.sigma_bar_dbsm)
    }

    /// `N_d W` in watts.
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.n_d_dbm_hz) * self.w_hz
    }

    /// `β' = 4π β R^{2α} / σ̄` for a threshold in dB.
    pub fn beta_prime(&self, beta_db: f64) -> f64 {
        4.0 * PI * db_to_linear(beta_db) * self.target_range.powf(2.0 * self.alpha) / self.sigma_bar()
    }

    pub fn signal_power(&self, sigma_c: f64) -> f64 {
        signal_power(self, sigma_c, self.target_range)
    }
}

/// `S = γ σ_c P R^{-2α}` at target range `range`.
pub fn signal_power(cfg: &RadarConfig, sigma_c: f64, range: f64) -> f64 {
    cfg.gamma() * sigma_c * cfg.power_watts() * range.powf(-2.0 * cfg.alpha)
}

/// Received power of one interferer at distance `dist` with fading `h`.
pub fn interference_power(cfg: &RadarConfig, h: f64, dist: f64) -> f64 {
    4.0 * PI * cfg.gamma() * cfg.power_watts() * h * dist.powf(-cfg.alpha)
}

/// Random channel state of one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDraw {
    /// Swerling-I cross-section, exponential with mean σ̄.
    pub sigma_c: f64,
    /// Unit-mean exponential fading power, one per interferer.
    pub fading: Vec<f64>,
}

impl ChannelDraw {
    pub fn sample<R: Rng>(cfg: &RadarConfig, interferers: usize, rng: &mut R) -> Self {
        let sigma_c = cfg.sigma_bar() * positive_exp(rng);
        let fading = (0..interferers).map(|_| positive_exp(rng)).collect();
        Self { sigma_c, fading }
    }
}

fn positive_exp<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = Exp1.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

/// Radars of `net` that interfere with the ego under `cfg`: the mutual
/// visibility predicate, minus ego-street radars closer than the target when
/// the ego-street span starts beyond it.
pub fn interferers<'a>(net: &'a NetworkRealization, cfg: &RadarConfig) -> Result<Vec<&'a VehiclePoint>> {
    let beam = cfg.beam()?;
    let mut set = interfering_set(net, beam);
    if cfg.ego_street == EgoStreetSpan::BeyondTarget {
        set.retain(|v| {
            v.line_index != NetworkRealization::EGO_STREET || v.position.distance(net.ego) > net.target_range
        });
    }
    Ok(set)
}

/// Power components at the ego radar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub signal: f64,
    pub interference: f64,
    pub noise: f64,
}

impl LinkBudget {
    /// `S / (N + I)`; `+∞` when there is neither noise nor interference.
    pub fn sir(&self) -> f64 {
        let den = self.noise + self.interference;
        if den == 0.0 {
            f64::INFINITY
        } else {
            self.signal / den
        }
    }
}

/// Evaluates the link budget for one realization. `draws.fading` must have
/// one entry per radar returned by [`interferers`].
pub fn link_budget(net: &NetworkRealization, cfg: &RadarConfig, draws: &ChannelDraw) -> Result<LinkBudget> {
    let set = interferers(net, cfg)?;
    if set.len() != draws.fading.len() {
        return Err(Error::invalid(
            "draws",
            format!("{} fading draws for {} interferers", draws.fading.len(), set.len()),
        ));
    }
    let interference = set
        .iter()
        .zip(&draws.fading)
        .map(|(v, &h)| interference_power(cfg, h, v.position.distance(net.ego)))
        .sum();
    Ok(LinkBudget {
        signal: signal_power(cfg, draws.sigma_c, net.target_range),
        interference,
        noise: if cfg.include_noise { cfg.noise_watts() } else { 0.0 },
    })
}

/// SIR (SINR with `include_noise`) of one realization, linear.
pub fn sir_sample(net: &NetworkRealization, cfg: &RadarConfig, draws: &ChannelDraw) -> Result<f64> {
    Ok(link_budget(net, cfg, draws)?.sir())
}

/// Street network and vehicle intensity around the ego radar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", deny_unknown_fields)]
pub enum NetworkSpec {
    #[serde(rename = "PLCP")]
    Plcp { lambda_l: f64 },
    #[serde(rename = "BLCP")]
    Blcp { n_b: usize, r_g: f64, r0: f64 },
}

impl NetworkSpec {
    pub fn model(&self) -> CoxModel {
        match self {
            NetworkSpec::Plcp { .. } => CoxModel::Plcp,
            NetworkSpec::Blcp { .. } => CoxModel::Blcp,
        }
    }

    pub fn r0(&self) -> f64 {
        match *self {
            NetworkSpec::Plcp { .. } => 0.0,
            NetworkSpec::Blcp { r0, .. } => r0,
        }
    }
}

/// Everything needed to evaluate `p_D` at a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub radar: RadarConfig,
    pub network: NetworkSpec,
    /// Radar intensity per travel direction on every street, m⁻¹.
    pub lambda: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        require_non_negative("lambda", self.lambda)?;
        match self.network {
            NetworkSpec::Plcp { lambda_l } => PlpSpec {
                lambda_l,
                window_radius: self.radar.range,
            }
            .validate(),
            NetworkSpec::Blcp { n_b, r_g, r0 } => {
                require_finite("r0", r0)?;
                BlpSpec { n_b, r_g }.validate()
            }
        }
    }

    /// Analytic `p_D(β)`.
    pub fn p_d(&self, beta_db: f64) -> Result<f64> {
        match self.network {
            NetworkSpec::Plcp { lambda_l } => p_d_plcp(beta_db, &self.radar, lambda_l, self.lambda),
            NetworkSpec::Blcp { n_b, r_g, r0 } => p_d_blcp(r0, beta_db, &self.radar, &BlpSpec { n_b, r_g }, self.lambda),
        }
    }

    /// Realization `index` of the Palm-conditioned network.
    pub fn realize(&self, index: u64, seed: u64) -> Result<NetworkRealization> {
        let seed = derive_seed(seed, Purpose::Realization, index);
        let lines = match self.network {
            NetworkSpec::Plcp { lambda_l } => sample_plp(
                &PlpSpec {
                    lambda_l,
                    window_radius: self.radar.range,
                },
                seed,
            )?,
            NetworkSpec::Blcp { n_b, r_g, .. } => sample_blp(&BlpSpec { n_b, r_g }, seed)?,
        };
        let palm = PalmConfig {
            model: self.network.model(),
            r0: self.network.r0(),
            lambda: self.lambda,
            extent: self.radar.range + 1.0,
            target_range: self.radar.target_range,
            ego_heading: Heading::Forward,
        };
        palm_condition(&lines, &palm, seed)
    }

    /// Link budget of realization `index`, with its own channel draws.
    pub fn sample_link(&self, index: u64, seed: u64) -> Result<LinkBudget> {
        let net = self.realize(index, seed)?;
        let count = interferers(&net, &self.radar)?.len();
        let mut rng = substream(derive_seed(seed, Purpose::Realization, index), Purpose::Channel, 0);
        let draws = ChannelDraw::sample(&self.radar, count, &mut rng);
        link_budget(&net, &self.radar, &draws)
    }
}

/// Per-interferer miss factor `1 - 1/(1 + β' w^{-α}) = β'/(w^α + β')`.
fn miss(beta_p: f64, alpha: f64, w: f64) -> f64 {
    beta_p / (w.powf(alpha) + beta_p)
}

/// `∫_a^b β'/(w(v)^α + β') dv` along a crossing street.
fn street_integral(cfg: &RadarConfig, beta_p: f64, theta: f64, d: f64, iv: &InterferenceInterval) -> Result<f64> {
    if iv.empty {
        return Ok(0.0);
    }
    let (s, c) = (theta.sin().abs(), theta.cos().abs());
    if cfg.alpha == 2.0 {
        // w² = (v + d c)² + (d s)², so the integral is an arctangent.
        let k = ((d * s).powi(2) + beta_p).sqrt();
        let shift = d * c;
        return Ok(beta_p / k * (((iv.b + shift) / k).atan() - ((iv.a + shift) / k).atan()));
    }
    Ok(try_integrate(
        |v| Ok::<_, Error>(miss(beta_p, cfg.alpha, ego_distance(d, theta, v, false))),
        iv.a,
        iv.b,
        &[],
        ANALYTIC_TOLERANCE,
    )?
    .value)
}

/// `∫ β'/(v^α + β') dv` over the ego-street interval.
fn ego_street_integral(cfg: &RadarConfig, beta_p: f64) -> Result<f64> {
    let iv = ego_street_interval(cfg.target_range, cfg.range, cfg.ego_street);
    if iv.empty {
        return Ok(0.0);
    }
    if cfg.alpha == 2.0 {
        let k = beta_p.sqrt();
        return Ok(k * ((iv.b / k).atan() - (iv.a / k).atan()));
    }
    Ok(try_integrate(
        |v| Ok::<_, Error>(miss(beta_p, cfg.alpha, v)),
        iv.a,
        iv.b,
        &[],
        ANALYTIC_TOLERANCE,
    )?
    .value)
}

fn check_beta(beta_db: f64) -> Result<()> {
    if beta_db.is_nan() {
        return Err(Error::invalid("beta_db", "NaN"));
    }
    Ok(())
}

/// Beyond ±400 dB every per-interferer factor is 0 or 1 to double precision.
const BETA_DB_LIMIT: f64 = 400.0;

/// Analytic `p_D` for the PLCP with the ego at the origin.
pub fn p_d_plcp(beta_db: f64, cfg: &RadarConfig, lambda_l: f64, lambda: f64) -> Result<f64> {
    cfg.validate()?;
    check_beta(beta_db)?;
    require_non_negative("lambda_l", lambda_l)?;
    require_non_negative("lambda", lambda)?;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let beta_db = beta_db.clamp(-BETA_DB_LIMIT, BETA_DB_LIMIT);
    let beta_p = cfg.beta_prime(beta_db);
    let beam = cfg.beam()?;
    let mut exponent = lambda * ego_street_integral(cfg, beta_p)?;
    if lambda_l > 0.0 {
        // Crossing streets with r > R sinΩ cannot interfere; c2 bounds the support.
        let lines = integrate_crossings(beam, 0.0, 0.0, beam.range * beam.omega.sin(), ANALYTIC_TOLERANCE, |theta, r| {
            let u = r / theta.sin();
            let iv = interval_plcp(theta, u, beam.omega, beam.range)?;
            Ok(-(-lambda * street_integral(cfg, beta_p, theta, u, &iv)?).exp_m1())
        })?;
        exponent += lambda_l * lines;
    }
    Ok((-exponent).exp().clamp(0.0, 1.0))
}

/// Analytic `p_D` for the BLCP with the ego at `(0, r0)`.
pub fn p_d_blcp(r0: f64, beta_db: f64, cfg: &RadarConfig, blp: &BlpSpec, lambda: f64) -> Result<f64> {
    cfg.validate()?;
    blp.validate()?;
    check_beta(beta_db)?;
    require_finite("r0", r0)?;
    require_non_negative("lambda", lambda)?;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let beta_db = beta_db.clamp(-BETA_DB_LIMIT, BETA_DB_LIMIT);
    let beta_p = cfg.beta_prime(beta_db);
    let beam = cfg.beam()?;
    let ego = (-lambda * ego_street_integral(cfg, beta_p)?).exp();
    if blp.n_b == 0 {
        return Ok(ego.clamp(0.0, 1.0));
    }
    let hit = integrate_crossings(beam, r0, 0.0, blp.r_g, ANALYTIC_TOLERANCE, |theta, r| {
        let d = r / theta.sin() - r0;
        let iv = interval_blcp(theta, d, beam.omega, beam.range)?;
        Ok(-(-lambda * street_integral(cfg, beta_p, theta, d, &iv)?).exp_m1())
    })? / (TAU * blp.r_g);
    let per_line = (1.0 - hit).clamp(0.0, 1.0);
    Ok((ego * per_line.powf(blp.n_b as f64)).clamp(0.0, 1.0))
}

/// SIR samples of `n` independent realizations, in index order.
///
/// Realization `i` depends only on `(seed, i)`, so the result is the same for
/// any thread count.
pub fn sir_samples(scenario: &Scenario, n: usize, seed: u64) -> Result<Vec<f64>> {
    scenario.validate()?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| scenario.sample_link(i, seed).map(|l| l.sir()))
        .collect()
}

/// Empirical CCDF point with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ccdf {
    pub p_d: f64,
    pub stderr: f64,
}

/// `P[SIR > β]` from samples, for each threshold in dB.
pub fn empirical_ccdf(samples: &[f64], beta_db: &[f64]) -> Vec<Ccdf> {
    let n = samples.len() as f64;
    beta_db
        .iter()
        .map(|&b| {
            let threshold = db_to_linear(b);
            let hits = samples.iter().filter(|&&s| s > threshold).count() as f64;
            let p = if n > 0.0 { hits / n } else { f64::NAN };
            Ccdf {
                p_d: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect()
}

/// Empirical `p_D` on a β grid from `n_realizations` Palm realizations.
pub fn monte_carlo_pd(scenario: &Scenario, beta_db: &[f64], n_realizations: usize, seed: u64) -> Result<Vec<Ccdf>> {
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be at least 1"));
    }
    Ok(empirical_ccdf(&sir_samples(scenario, n_realizations, seed)?, beta_db))
}

/// Mean size of the interfering set over `n` realizations, with its standard error.
pub fn empirical_mean_interferers(scenario: &Scenario, n: usize, seed: u64) -> Result<(f64, f64)> {
    scenario.validate()?;
    if n < 2 {
        return Err(Error::invalid("n", "need at least two realizations"));
    }
    let counts: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let net = scenario.realize(i, seed)?;
            Ok(interferers(&net, &scenario.radar)?.len() as f64)
        })
        .collect::<Result<_>>()?;
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Ok((mean, (var / n as f64).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    MonteCarlo,
}

/// Scenario parameter varied along a detection curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Threshold β, dB.
    Beta,
    /// Target range R, m.
    TargetRange,
    /// Vehicle intensity λ, m⁻¹.
    Lambda,
    /// Half-beamwidth Ω, degrees.
    OmegaDeg,
    /// PLP line intensity λ_L, m⁻¹.
    LambdaL,
    /// Number of BLP lines.
    NB,
    /// Ego offset r₀, m.
    R0,
}

impl SweepVariable {
    pub fn unit(self) -> &'static str {
        match self {
            SweepVariable::Beta => "dB",
            SweepVariable::TargetRange | SweepVariable::R0 => "m",
            SweepVariable::Lambda | SweepVariable::LambdaL => "1/m",
            SweepVariable::OmegaDeg => "deg",
            SweepVariable::NB => "lines",
        }
    }

    /// `scenario` with this variable set to `x`. β is not a scenario field
    /// and leaves it unchanged.
    pub fn apply(self, scenario: &Scenario, x: f64) -> Result<Scenario> {
        let mut s = *scenario;
        match (self, &mut s.network) {
            (SweepVariable::Beta, _) => {}
            (SweepVariable::TargetRange, _) => s.radar.target_range = x,
            (SweepVariable::Lambda, _) => s.lambda = x,
            (SweepVariable::OmegaDeg, _) => s.radar.omega = x.to_radians(),
            (SweepVariable::LambdaL, NetworkSpec::Plcp { lambda_l }) => *lambda_l = x,
            (SweepVariable::NB, NetworkSpec::Blcp { n_b, .. }) => {
                if !(x >= 0.0 && x.fract() == 0.0) {
                    return Err(Error::invalid("n_b", format!("sweep value {x} is not a line count")));
                }
                *n_b = x as usize;
            }
            (SweepVariable::R0, NetworkSpec::Blcp { r0, .. }) => *r0 = x,
            (var, _) => {
                return Err(Error::invalid(
                    "sweep.variable",
                    format!("{var:?} does not apply to the {:?} model", scenario.network.model()),
                ))
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub p_d: f64,
    /// Binomial standard error; `None` for analytic points.
    pub stderr: Option<f64>,
    pub beta_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionCurve {
    pub sweep_variable: SweepVariable,
    pub points: Vec<CurvePoint>,
    pub method: Method,
    /// Present iff `method` is Monte Carlo.
    pub seed: Option<u64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("sweep.grid", "empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("sweep.grid", "non-finite value"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sweep.grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Analytic detection curve. Points are evaluated in parallel.
pub fn analytic_curve(scenario: &Scenario, var: SweepVariable, grid: &[f64], beta_db: f64) -> Result<DetectionCurve> {
    check_grid(grid)?;
    let points = grid
        .par_iter()
        .map(|&x| {
            let beta = if var == SweepVariable::Beta { x } else { beta_db };
            let p_d = var.apply(scenario, x)?.p_d(beta)?;
            Ok(CurvePoint {
                x,
                p_d,
                stderr: None,
                beta_db: beta,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DetectionCurve {
        sweep_variable: var,
        points,
        method: Method::Analytic,
        seed: None,
    })
}

/// Monte Carlo detection curve. Every sweep point reuses realization indices
/// `0..n` of the same seed (common random numbers); a β sweep reuses one
/// sample set for the whole grid.
pub fn monte_carlo_curve(
    scenario: &Scenario,
    var: SweepVariable,
    grid: &[f64],
    beta_db: f64,
    n_realizations: usize,
    seed: u64,
) -> Result<DetectionCurve> {
    check_grid(grid)?;
    let points = if var == SweepVariable::Beta {
        monte_carlo_pd(scenario, grid, n_realizations, seed)?
            .into_iter()
            .zip(grid)
            .map(|(c, &x)| CurvePoint {
                x,
                p_d: c.p_d,
                stderr: Some(c.stderr),
                beta_db: x,
            })
            .collect()
    } else {
        grid.iter()
            .map(|&x| {
                let c = monte_carlo_pd(&var.apply(scenario, x)?, &[beta_db], n_realizations, seed)?[0];
                Ok(CurvePoint {
                    x,
                    p_d: c.p_d,
                    stderr: Some(c.stderr),
                    beta_db,
                })
            })
            .collect::<Result<_>>()?
    };
    Ok(DetectionCurve {
        sweep_variable: var,
        points,
        method: Method::MonteCarlo,
        seed: Some(seed),
    })
}

#[derive(Serialize)]
struct CurveRow<'a> {
    sweep_value: f64,
    p_d: f64,
    method: Method,
    stderr: Option<f64>,
    beta_db: f64,
    seed: Option<u64>,
    config_hash: &'a str,
}

impl DetectionCurve {
    /// CSV with columns `sweep_value,p_d,method,stderr,beta_db,seed,config_hash`.
    pub fn write_csv<W: Write>(&self, out: W, config_hash: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(CurveRow {
                sweep_value: p.x,
                p_d: p.p_d,
                method: self.method,
                stderr: p.stderr,
                beta_db: p.beta_db,
                seed: self.seed,
                config_hash,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Normalized histogram on a dB axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub width: f64,
    pub density: Vec<f64>,
    /// All samples equal: a single unit-width spike.
    pub degenerate: bool,
}

pub const MIN_PDF_SAMPLES: usize = 1000;

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_PDF_SAMPLES {
        return Err(Error::Input(format!(
            "{} samples, at least {MIN_PDF_SAMPLES} needed for a density estimate",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite sample".into()));
    }
    Ok(())
}

fn histogram_on(samples: &[f64], lo: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1.0;
    }
    let norm = samples.len() as f64 * width;
    counts.iter().map(|c| c / norm).collect()
}

/// Histogram density estimate of `samples` (already in dB) with `bins` bins.
pub fn pdf_estimate(samples: &[f64], bins: usize) -> Result<Histogram> {
    check_samples(samples)?;
    if bins == 0 {
        return Err(Error::invalid("bins", "must be positive"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if lo == hi {
        return Ok(Histogram {
            centers: vec![lo],
            width: 1.0,
            density: vec![1.0],
            degenerate: true,
        });
    }
    let width = (hi - lo) / bins as f64;
    Ok(Histogram {
        centers: (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect(),
        width,
        density: histogram_on(samples, lo, width, bins),
        degenerate: false,
    })
}

/// Two densities on a shared grid and where they cross.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdfPair {
    pub centers: Vec<f64>,
    pub width: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// Crossing between the two modes, dB; `None` if the densities never cross there.
    pub crossing: Option<f64>,
}

/// Estimates both densities on a common grid and locates the crossing point
/// between their modes (linear interpolation between bin centres; the mean
/// is reported when noise produces several sign changes).
pub fn pdf_pair(first: &[f64], second: &[f64], bins: usize) -> Result<PdfPair> {
    check_samples(first)?;
    check_samples(second)?;
    if bins < 2 {
        return Err(Error::invalid("bins", "need at least two bins"));
    }
    let (lo, hi) = first
        .iter()
        .chain(second)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if lo == hi {
        return Err(Error::Input("both sample sets are the same constant".into()));
    }
    let width = (hi - lo) / bins as f64;
    let centers: Vec<f64> = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    let f = histogram_on(first, lo, width, bins);
    let g = histogram_on(second, lo, width, bins);
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let (ma, mb) = (argmax(&f), argmax(&g));
    let (from, to) = (ma.min(mb), ma.max(mb));
    let diff: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - b).collect();
    let crossings: Vec<f64> = (from..to)
        .filter(|&k| diff[k] == 0.0 || diff[k].signum() != diff[k + 1].signum())
        .map(|k| {
            let t = if diff[k] == diff[k + 1] { 0.0 } else { diff[k] / (diff[k] - diff[k + 1]) };
            centers[k] + t * width
        })
        .collect();
    let crossing = (!crossings.is_empty()).then(|| crossings.iter().sum::<f64>() / crossings.len() as f64);
    Ok(PdfPair {
        centers,
        width,
        first: f,
        second: g,
        crossing,
    })
}

#[derive(Serialize)]
struct PdfRow {
    bin_center_db: f64,
    density_signal_plus_interference: f64,
    density_interference_only: f64,
}

impl PdfPair {
    /// CSV `bin_center_db,density_signal_plus_interference,density_interference_only`,
    /// with `first` as the signal-plus-interference density.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for ((&c, &a), &b) in self.centers.iter().zip(&self.first).zip(&self.second) {
            w.serialize(PdfRow {
                bin_center_db: c,
                density_signal_plus_interference: a,
                density_interference_only: b,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Received powers in dB re 1 W for realizations with the target range drawn
/// uniformly from `[range_lo, range_hi]`: (signal + interference, interference).
/// Realizations without any interferer have no interference-only sample.
pub fn power_samples(
    scenario: &Scenario,
    range_lo: f64,
    range_hi: f64,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    scenario.validate()?;
    require_positive("range_lo", range_lo)?;
    if !(range_hi >= range_lo) {
        return Err(Error::invalid("range_hi", "must not be below range_lo"));
    }
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, Purpose::Target, i);
            let mut s = *scenario;
            s.radar.target_range = range_lo + (range_hi - range_lo) * rng.random::<f64>();
            let link = s.sample_link(i, seed)?;
            Ok((link.signal + link.interference + link.noise, link.interference + link.noise))
        })
        .collect::<Result<_>>()?;
    let total = pairs.iter().map(|p| linear_to_db(p.0)).collect();
    let interference = pairs.iter().filter(|p| p.1 > 0.0).map(|p| linear_to_db(p.1)).collect();
    Ok((total, interference))
}
