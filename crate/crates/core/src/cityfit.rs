//! Line-process parameters from street-network summaries, and hourly
//! vehicle intensity from congestion profiles.

use std::f64::consts::PI;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::geometry::expected_length_in_box;

/// Total street length inside centred square boxes of growing side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreetLengthCurve {
    /// `(box_side_m, total_length_m)`.
    pub rows: Vec<(f64, f64)>,
}

impl StreetLengthCurve {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Input("street length curve has no rows".into()));
        }
        for &(side, length) in &rows {
            require_positive("box_side_m", side)?;
            require_non_negative("total_length_m", length)?;
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Input("box sides must be strictly increasing".into()));
        }
        if rows.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::Input("total length must not decrease with box side".into()));
        }
        Ok(Self { rows })
    }

    /// The curve a BLP with `n_b` lines (real-valued) and radius `r_g` would produce.
    pub fn from_model(n_b: f64, r_g: f64, sides: &[f64]) -> Result<Self> {
        let rows = sides
            .iter()
            .map(|&s| Ok((s, expected_length_in_box(n_b, r_g, s)?)))
            .collect::<Result<_>>()?;
        Self::new(rows)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.rows.iter().map(|&(s, l)| (s * factor, l * factor)).collect())
    }
}

/// PLP line intensity from a street density (length per area): `density / π`.
pub fn fit_plp_density(street_density_per_area: f64) -> Result<f64> {
    require_non_negative("street_density_per_area", street_density_per_area)?;
    Ok(street_density_per_area / PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlpFit {
    /// Rounded line count.
    pub n_b: usize,
    pub n_b_continuous: f64,
    pub r_g: f64,
    /// Euclidean norm of the log-length residuals.
    pub residual: f64,
    pub iterations: usize,
}

/// Multi-start grid: `n_B` from 10 to 5000 and `R_g` from 100 m to 50 km, log-spaced.
pub const START_N_B: (f64, f64, usize) = (10.0, 5000.0, 6);
pub const START_R_G: (f64, f64, usize) = (100.0, 50_000.0, 10);

const MAX_ITERATIONS: usize = 200;
/// Condition number of `JᵀJ` above which the two parameters are not separately determined.
const MAX_CONDITION: f64 = 1e10;

fn log_grid((lo, hi, n): (f64, f64, usize)) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp())
        .collect()
}

struct Problem {
    sides: Vec<f64>,
    log_obs: Vec<f64>,
}

impl Problem {
    /// Log residuals at `p = (ln n_B, ln R_g)`. Lengths are linear in `n_B`,
    /// so the model is evaluated at `n_B = 1` and shifted.
    fn residuals(&self, p: [f64; 2]) -> Result<Vec<f64>> {
        let r_g = p[1].exp();
        self.sides
            .iter()
            .zip(&self.log_obs)
            .map(|(&s, &obs)| Ok(p[0] + expected_length_in_box(1.0, r_g, s)?.ln() - obs))
            .collect()
    }

    fn jacobian(&self, p: [f64; 2]) -> Result<Vec<[f64; 2]>> {
        let h = 1e-6;
        let up = self.residuals([p[0], p[1] + h])?;
        let down = self.residuals([p[0], p[1] - h])?;
        Ok(up.iter().zip(&down).map(|(u, d)| [1.0, (u - d) / (2.0 * h)]).collect())
    }
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// `JᵀJ` and `Jᵀr`.
fn normal_equations(j: &[[f64; 2]], r: &[f64]) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut a = [[0.0; 2]; 2];
    let mut g = [0.0; 2];
    for (row, &res) in j.iter().zip(r) {
        for i in 0..2 {
            g[i] += row[i] * res;
            for k in 0..2 {
                a[i][k] += row[i] * row[k];
            }
        }
    }
    (a, g)
}

fn condition_number(a: [[f64; 2]; 2]) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (hi, lo) = (0.5 * tr + disc, 0.5 * tr - disc);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Levenberg–Marquardt from one start. Returns `(p, ‖r‖², iterations)`.
fn levenberg_marquardt(problem: &Problem, start: [f64; 2]) -> Result<([f64; 2], f64, usize)> {
    let mut p = start;
    let mut r = problem.residuals(p)?;
    let mut cost = norm2(&r);
    let mut mu = 1e-3;
    for it in 0..MAX_ITERATIONS {
        let j = problem.jacobian(p)?;
        let (a, g) = normal_equations(&j, &r);
        let mut accepted = false;
        while mu < 1e12 {
            let m = [
                [a[0][0] * (1.0 + mu), a[0][1]],
                [a[1][0], a[1][1] * (1.0 + mu)],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == 0.0 || !det.is_finite() {
                mu *= 10.0;
                continue;
            }
            let step = [
                -(m[1][1] * g[0] - m[0][1] * g[1]) / det,
                -(m[0][0] * g[1] - m[1][0] * g[0]) / det,
            ];
            // Keep R_g within a sane numeric range during the search.
            let trial = [p[0] + step[0], (p[1] + step[1]).clamp(-20.0, 40.0)];
            let r_trial = problem.residuals(trial)?;
            let c_trial = norm2(&r_trial);
            if c_trial.is_finite() && c_trial <= cost {
                let small = step[0].abs().max(step[1].abs()) < 1e-12 || cost - c_trial <= 1e-15 * cost.max(1e-300);
                p = trial;
                r = r_trial;
                cost = c_trial;
                mu = (mu / 10.0).max(1e-12);
                accepted = true;
                if small {
                    return Ok((p, cost, it + 1));
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            return Ok((p, cost, it + 1));
        }
    }
    Ok((p, cost, MAX_ITERATIONS))
}

/// Least-squares fit of `(n_B, R_g)` to a street-length curve, in log space.
///
/// Each start of the grid is refined independently (in parallel); the
/// lowest residual wins, ties broken by the smaller `(n_B, R_g)`.
pub fn fit_blp_params(curve: &StreetLengthCurve) -> Result<BlpFit> {
    if curve.rows.len() < 4 {
        return Err(Error::Input(format!("{} curve points, at least 4 needed", curve.rows.len())));
    }
    if curve.rows.iter().any(|&(_, l)| l <= 0.0) {
        return Err(Error::NonIdentifiable(
            "curve has zero total length; R_g cannot be determined".into(),
        ));
    }
    let problem = Problem {
        sides: curve.rows.iter().map(|r| r.0).collect(),
        log_obs: curve.rows.iter().map(|r| r.1.ln()).collect(),
    };
    let starts: Vec<[f64; 2]> = log_grid(START_N_B)
        .into_iter()
        .flat_map(|n| log_grid(START_R_G).into_iter().map(move |g| [n.ln(), g.ln()]))
        .collect();
    let results: Vec<([f64; 2], f64, usize)> = starts
        .par_iter()
        .map(|&s| levenberg_marquardt(&problem, s))
        .collect::<Result<_>>()?;
    let (p, cost, iterations) = results
        .into_iter()
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(a.0[0].total_cmp(&b.0[0]))
                .then(a.0[1].total_cmp(&b.0[1]))
        })
        .expect("start grid is not empty");

    let (a, _) = normal_equations(&problem.jacobian(p)?, &problem.residuals(p)?);
    let cond = condition_number(a);
    if cond > MAX_CONDITION {
        return Err(Error::NonIdentifiable(format!(
            "JᵀJ condition number {cond:.3e} at the optimum: only a combination of n_B and R_g is determined \
             (does the curve extend beyond the plateau?)"
        )));
    }
    let n = p[0].exp();
    Ok(BlpFit {
        n_b: n.round() as usize,
        n_b_continuous: n,
        r_g: p[1].exp(),
        residual: cost.sqrt(),
        iterations,
    })
}

/// Hourly congestion and the data to scale it to vehicle intensity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CongestionProfile {
    /// Congestion percentage for hours 0..24.
    pub congestion: Vec<f64>,
    /// Defaults to the largest entry of `congestion`.
    pub c_max: Option<f64>,
    /// Peak intensity, m⁻¹; derived from the fleet data when absent.
    pub lambda_max: Option<f64>,
    pub fleet_size: f64,
    pub road_length_total: f64,
    pub peak_occupancy_fraction: f64,
}

pub const DEFAULT_PEAK_OCCUPANCY: f64 = 0.08;

impl CongestionProfile {
    pub fn c_max(&self) -> f64 {
        self.c_max
            .unwrap_or_else(|| self.congestion.iter().copied().fold(0.0, f64::max))
    }

    /// Supplied `λ̂_max`, or peak occupancy × fleet / road length.
    pub fn lambda_max(&self) -> Result<f64> {
        match self.lambda_max {
            Some(l) => {
                require_non_negative("lambda_max", l)?;
                Ok(l)
            }
            None => {
                require_non_negative("fleet_size", self.fleet_size)?;
                require_positive("road_length_total", self.road_length_total)?;
                require_non_negative("peak_occupancy_fraction", self.peak_occupancy_fraction)?;
                Ok(self.peak_occupancy_fraction * self.fleet_size / self.road_length_total)
            }
        }
    }
}

/// `λ̂_i = λ̂_max C_i / C_max` for each hour.
pub fn hourly_lambda(profile: &CongestionProfile) -> Result<Vec<f64>> {
    if profile.congestion.len() != 24 {
        return Err(Error::Input(format!(
            "{} hourly congestion values, expected 24",
            profile.congestion.len()
        )));
    }
    let c_max = profile.c_max();
    if !(c_max > 0.0 && c_max.is_finite()) {
        return Err(Error::invalid("c_max", format!("must be positive, got {c_max}")));
    }
    for &c in &profile.congestion {
        if !(0.0..=c_max).contains(&c) {
            return Err(Error::invalid("congestion", format!("{c} outside [0, C_max = {c_max}]")));
        }
    }
    let lambda_max = profile.lambda_max()?;
    Ok(profile.congestion.iter().map(|c| lambda_max * c / c_max).collect())
}

#[derive(Debug, Deserialize)]
struct CurveRow {
    box_side_m: f64,
    total_length_m: f64,
}

#[derive(Debug, Deserialize)]
struct CongestionRow {
    hour: usize,
    congestion_pct: f64,
}

/// Scalar city data from `city_meta.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CityMeta {
    pub street_density_per_area: f64,
    pub fleet_size: f64,
    pub road_length_m: f64,
}

fn rows<T: serde::de::DeserializeOwned, R: Read>(input: R, what: &str) -> Result<Vec<T>> {
    let rows: Vec<T> = csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::Input(format!("{what} has no data rows")));
    }
    Ok(rows)
}

/// `box_side_m,total_length_m`.
pub fn read_street_curve<R: Read>(input: R) -> Result<StreetLengthCurve> {
    let rows: Vec<CurveRow> = rows(input, "street curve")?;
    StreetLengthCurve::new(rows.into_iter().map(|r| (r.box_side_m, r.total_length_m)).collect())
}

/// `hour,congestion_pct` for hours 0..=23, any order.
pub fn read_congestion<R: Read>(input: R) -> Result<Vec<f64>> {
    let rows: Vec<CongestionRow> = rows(input, "congestion table")?;
    let mut out = vec![None; 24];
    for r in rows {
        let slot = out
            .get_mut(r.hour)
            .ok_or_else(|| Error::Input(format!("hour {} outside 0..=23", r.hour)))?;
        if slot.replace(r.congestion_pct).is_some() {
            return Err(Error::Input(format!("hour {} listed twice", r.hour)));
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(h, c)| c.ok_or_else(|| Error::Input(format!("hour {h} missing"))))
        .collect()
}

/// `street_density_per_area,fleet_size,road_length_m`, one row.
pub fn read_city_meta<R: Read>(input: R) -> Result<CityMeta> {
    let mut rows: Vec<CityMeta> = rows(input, "city metadata")?;
    if rows.len() != 1 {
        return Err(Error::Input(format!("city metadata has {} rows, expected 1", rows.len())));
    }
    Ok(rows.remove(0))
}
