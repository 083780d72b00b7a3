//! Lines in `(θ, r)` form and the two line processes built from them.
//!
//! A line `(θ, r)` is the set `x·cosθ + y·sinθ = r`. Its unit direction
//! `(-sinθ, cosθ)` doubles as the boresight `a` of radars driving along it.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::rng::{substream, Purpose};

/// `|sinθ|` below this makes a line parallel to the ego street.
pub const PARALLEL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add_scaled(self, dir: Point, t: f64) -> Point {
        Point::new(self.x + t * dir.x, self.y + t * dir.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        self.sub(other).norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineParam {
    pub theta: f64,
    pub r: f64,
}

impl LineParam {
    pub const fn new(theta: f64, r: f64) -> Self {
        Self { theta, r }
    }

    /// The ego street: the y-axis, `(θ, r) = (0, 0)`.
    pub const EGO_STREET: LineParam = LineParam::new(0.0, 0.0);

    pub fn normal(&self) -> Point {
        Point::new(self.theta.cos(), self.theta.sin())
    }

    /// Unit vector `a = (-sinθ, cosθ)` along the line.
    pub fn direction(&self) -> Point {
        Point::new(-self.theta.sin(), self.theta.cos())
    }

    /// Foot of the perpendicular from the origin.
    pub fn foot(&self) -> Point {
        let n = self.normal();
        Point::new(self.r * n.x, self.r * n.y)
    }

    /// Point at signed arc length `s` from the foot, measured along `a`.
    pub fn point_at(&self, s: f64) -> Point {
        self.foot().add_scaled(self.direction(), s)
    }

    /// Arc-length coordinate of the orthogonal projection of `p`.
    pub fn coordinate_of(&self, p: Point) -> f64 {
        p.sub(self.foot()).dot(self.direction())
    }

    /// `x·cosθ + y·sinθ - r`; zero for points on the line.
    pub fn residual(&self, p: Point) -> f64 {
        p.dot(self.normal()) - self.r
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        self.residual(p).abs()
    }

    pub fn is_parallel_to_ego_street(&self) -> bool {
        self.theta.sin().abs() < PARALLEL_TOLERANCE
    }

    /// Binomial-domain form: `θ ∈ [0, π)`, signed `r`. `(θ, r)` and `(θ+π, -r)` are the same line.
    pub fn to_binomial_form(self) -> LineParam {
        let theta = self.theta.rem_euclid(TAU);
        if theta >= PI {
            LineParam::new(theta - PI, -self.r)
        } else {
            LineParam::new(theta, self.r)
        }
    }

    /// Poisson-domain form: `θ ∈ [0, 2π)`, `r >= 0`.
    pub fn to_poisson_form(self) -> LineParam {
        let (theta, r) = if self.r < 0.0 {
            (self.theta + PI, -self.r)
        } else {
            (self.theta, self.r)
        };
        LineParam::new(theta.rem_euclid(TAU), r)
    }

    /// Arc-length interval `[s_lo, s_hi]` of the chord inside a disk, if any.
    pub fn chord_in_disk(&self, center: Point, radius: f64) -> Option<(f64, f64)> {
        let offset = self.residual(center);
        if offset.abs() >= radius {
            return None;
        }
        let half = (radius * radius - offset * offset).sqrt();
        let mid = self.coordinate_of(center);
        Some((mid - half, mid + half))
    }
}

/// Which generating domain a [`LineSet`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineDomain {
    /// `[0, 2π) × (0, ∞)`.
    Poisson,
    /// `[0, π) × [-R_g, R_g]`.
    Binomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlpSpec {
    /// Line intensity per unit measure of the `(θ, r)` cylinder.
    pub lambda_l: f64,
    /// Lines are materialized only for `r <= window_radius`.
    pub window_radius: f64,
}

impl PlpSpec {
    pub fn validate(&self) -> Result<()> {
        require_non_negative("lambda_l", self.lambda_l)?;
        require_positive("window_radius", self.window_radius)
    }

    /// Expected number of lines in the window, `λ_L · 2π · window_radius`.
    pub fn mean_line_count(&self) -> f64 {
        self.lambda_l * TAU * self.window_radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlpSpec {
    pub n_b: usize,
    pub r_g: f64,
}

impl BlpSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("r_g", self.r_g)
    }

    /// Line intensity of the Poisson line process that matches this BLP
    /// inside the generating disk, `n_B / (2π R_g)`.
    pub fn equivalent_lambda_l(&self) -> f64 {
        self.n_b as f64 / (TAU * self.r_g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSet {
    pub lines: Vec<LineParam>,
    pub domain: LineDomain,
}

impl LineSet {
    pub fn empty(domain: LineDomain) -> Self {
        Self {
            lines: Vec::new(),
            domain,
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LineParam> {
        self.lines.iter()
    }
}

/// Samples a Poisson line process truncated to `r <= window_radius`.
pub fn sample_plp(spec: &PlpSpec, seed: u64) -> Result<LineSet> {
    spec.validate()?;
    let mean = spec.mean_line_count();
    if mean == 0.0 {
        return Ok(LineSet::empty(LineDomain::Poisson));
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("lambda_l", e.to_string()))?
        .sample(&mut substream(seed, Purpose::LineCount, 0)) as u64;
    let lines = (0..count)
        .map(|i| {
            let mut rng = substream(seed, Purpose::LineParams, i);
            let theta = rng.random::<f64>() * TAU;
            // (0, W]: flip the half-open unit interval.
            let r = (1.0 - rng.random::<f64>()) * spec.window_radius;
            LineParam::new(theta, r)
        })
        .collect();
    Ok(LineSet {
        lines,
        domain: LineDomain::Poisson,
    })
}

/// Samples a binomial line process: exactly `n_b` i.i.d. lines on `[0, π) × [-R_g, R_g]`.
pub fn sample_blp(spec: &BlpSpec, seed: u64) -> Result<LineSet> {
    spec.validate()?;
    let lines = (0..spec.n_b as u64)
        .map(|i| {
            let mut rng = substream(seed, Purpose::LineParams, i);
            let theta = rng.random::<f64>() * PI;
            let r = spec.r_g * (2.0 * rng.random::<f64>() - 1.0);
            LineParam::new(theta, r)
        })
        .collect();
    Ok(LineSet {
        lines,
        domain: LineDomain::Binomial,
    })
}

/// Signed distance along the ego street from the ego radar at `(0, r0)` to
/// the crossing with `line`: `d = r / sinθ - r0`. `None` for lines parallel
/// to the ego street.
pub fn intersection_distance(line: &LineParam, r0: f64) -> Option<f64> {
    let sin = line.theta.sin();
    if sin.abs() < PARALLEL_TOLERANCE {
        None
    } else {
        Some(line.r / sin - r0)
    }
}

/// Expected street length per unit area at distance `radius` from the centre
/// of a BLP: `n_B / (2 R_g)` inside the generating disk, then
/// `n_B · asin(R_g / ρ) / (π R_g)`.
pub fn blp_length_density(spec: &BlpSpec, radius: f64) -> f64 {
    length_density(spec.n_b as f64, spec.r_g, radius)
}

fn length_density(n_lines: f64, r_g: f64, radius: f64) -> f64 {
    let radius = radius.abs();
    if radius <= r_g {
        n_lines / (2.0 * r_g)
    } else {
        n_lines * (r_g / radius).asin() / (PI * r_g)
    }
}

/// `∫_0^T ρ(t) t dt`, the expected length inside a full circle of radius `T`
/// divided by `2π`.
fn radial_moment(n_lines: f64, r_g: f64, t: f64) -> f64 {
    if t <= r_g {
        n_lines * t * t / (4.0 * r_g)
    } else {
        let ratio = r_g / t;
        n_lines / (PI * r_g) * (0.5 * t * t * ratio.asin() + 0.5 * r_g * (t * t - r_g * r_g).sqrt())
    }
}

const BOX_TOLERANCE: Tolerance = Tolerance::new(1e-12, 1e-12);

/// Expected total BLP length in the centred square of side `box_side`,
/// with the line count treated as a real number (used by curve fitting).
pub fn expected_length_in_box(n_lines: f64, r_g: f64, box_side: f64) -> Result<f64> {
    require_non_negative("n_lines", n_lines)?;
    require_positive("r_g", r_g)?;
    require_positive("box_side", box_side)?;
    if n_lines == 0.0 {
        return Ok(0.0);
    }
    let half = 0.5 * box_side;
    // The square is eight copies of the triangle 0 <= φ <= π/4, t <= half / cos φ.
    // The radial profile changes form where half / cos φ = R_g.
    let breaks: Vec<f64> = if half < r_g && r_g < half * std::f64::consts::SQRT_2 {
        vec![(half / r_g).acos()]
    } else {
        Vec::new()
    };
    let est = integrate(
        |phi| radial_moment(n_lines, r_g, half / phi.cos()),
        0.0,
        FRAC_PI_4,
        &breaks,
        BOX_TOLERANCE,
    )?;
    Ok(8.0 * est.value)
}

/// Expected total line length of a BLP inside the centred square of side `box_side`.
pub fn blp_total_length_in_box(spec: &BlpSpec, box_side: f64) -> Result<f64> {
    spec.validate()?;
    expected_length_in_box(spec.n_b as f64, spec.r_g, box_side)
}
