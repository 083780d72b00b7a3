//! Closed-form interfering intervals on crossing streets.
//!
//! For a street crossing the ego street at signed distance `d` ahead of the
//! ego radar, the radars that mutually see the ego occupy one interval
//! `[a, b]` of the signed coordinate `v` along that street, measured from the
//! crossing point towards the ego's forward half-plane. The interval is the
//! intersection of the ego beam, the beam of a radar driving back towards the
//! ego street, and the range disk; which of its edges bound it depends on the
//! crossing angle class ([`CaseEvent`]) and on `d` relative to the two
//! thresholds
//!
//! ```text
//! c1 = R sinΩ (cotΩ - |cotθ|)     (crossing where the far beam edge meets the arc)
//! c2 = R sinΩ / |sinθ|            (crossing beyond which nothing interferes)
//! ```

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Result};
use crate::geometry::{intersection_distance, BlpSpec, LineParam, Point, PARALLEL_TOLERANCE};
use crate::quad::{try_integrate, Tolerance};
use crate::sector::Beam;

/// Which branch of the piecewise interval produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalCase {
    /// The ego street itself: `(R, R_k)`.
    EgoStreet,
    /// Crossing ahead, street within `Ω` of the ego axis: the interval runs
    /// from the near beam edge to the range arc.
    ArcAhead,
    /// Crossing ahead, street between `Ω` and `2Ω` off axis, crossing close
    /// enough (`d <= c1`) that both ends sit on beam edges.
    EdgeAhead,
    /// As [`IntervalCase::EdgeAhead`] but `c1 < d < c2`: the far end is on the arc.
    EdgeArcAhead,
    /// Crossing behind the ego (`c1 < d < 0`).
    Behind,
    /// Street parallel to the ego street.
    Parallel,
    /// No radar on the street can interfere.
    Outside,
}

impl fmt::Display for IntervalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            IntervalCase::EgoStreet => "ego_street",
            IntervalCase::ArcAhead => "arc_ahead",
            IntervalCase::EdgeAhead => "edge_ahead",
            IntervalCase::EdgeArcAhead => "edge_arc_ahead",
            IntervalCase::Behind => "behind",
            IntervalCase::Parallel => "parallel",
            IntervalCase::Outside => "outside",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceInterval {
    pub a: f64,
    pub b: f64,
    pub empty: bool,
    pub case: IntervalCase,
}

impl InterferenceInterval {
    fn empty(case: IntervalCase) -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            empty: true,
            case,
        }
    }

    /// Non-degenerate intervals only; a touching point has zero measure.
    fn bounded(a: f64, b: f64, case: IntervalCase) -> Self {
        if b > a {
            Self {
                a,
                b,
                empty: false,
                case,
            }
        } else {
            Self::empty(IntervalCase::Outside)
        }
    }

    pub fn length(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.b - self.a
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        !self.empty && v >= self.a && v <= self.b
    }
}

/// Which part of the ego street counts as interfering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgoStreetSpan {
    /// Oncoming radars between the target and `R_k`, as in the closed-form
    /// detection probability.
    #[default]
    BeyondTarget,
    /// Every oncoming radar within `R_k`.
    FromEgo,
}

/// Interval on the ego street.
pub fn ego_street_interval(target_range: f64, range: f64, span: EgoStreetSpan) -> InterferenceInterval {
    let start = match span {
        EgoStreetSpan::BeyondTarget => target_range,
        EgoStreetSpan::FromEgo => 0.0,
    };
    let mut iv = InterferenceInterval::bounded(start, range, IntervalCase::EgoStreet);
    if iv.empty {
        iv.case = IntervalCase::EgoStreet;
    }
    iv
}

/// Angular classes of a crossing street.
///
/// `A1, A4, A5, A8` hold streets within `Ω` of the ego axis, `A2, A3, A6, A7`
/// those between `Ω` and `2Ω`. Streets more than `2Ω` off axis never carry
/// interferers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseEvent {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
}

impl CaseEvent {
    pub const ALL: [CaseEvent; 8] = [
        CaseEvent::A1,
        CaseEvent::A2,
        CaseEvent::A3,
        CaseEvent::A4,
        CaseEvent::A5,
        CaseEvent::A6,
        CaseEvent::A7,
        CaseEvent::A8,
    ];

    /// Membership test, boundary conventions included, for `theta ∈ [0, 2π]`.
    pub fn contains(self, theta: f64, omega: f64) -> bool {
        let t = theta;
        match self {
            CaseEvent::A1 => (0.0..=omega).contains(&t) && t <= FRAC_PI_2,
            CaseEvent::A2 => t > omega && t <= 2.0 * omega && t <= FRAC_PI_2,
            CaseEvent::A3 => {
                let m = PI - t;
                m >= omega && m <= 2.0 * omega && t > FRAC_PI_2 && t <= PI
            }
            CaseEvent::A4 => {
                let m = PI - t;
                m >= 0.0 && m < omega && t > FRAC_PI_2 && t <= PI
            }
            CaseEvent::A5 => {
                let m = t - PI;
                m >= 0.0 && m <= omega && t > PI && t <= 1.5 * PI
            }
            CaseEvent::A6 => {
                let m = t - PI;
                m > omega && m <= 2.0 * omega && t > PI && t <= 1.5 * PI
            }
            CaseEvent::A7 => {
                let m = TAU - t;
                m >= omega && m <= 2.0 * omega && t > 1.5 * PI && t <= TAU
            }
            CaseEvent::A8 => {
                let m = TAU - t;
                m >= 0.0 && m < omega && t > 1.5 * PI && t <= TAU
            }
        }
    }

    /// The event containing `theta` (any real angle), if the street can carry interferers.
    pub fn classify(theta: f64, omega: f64) -> Option<CaseEvent> {
        let t = theta.rem_euclid(TAU);
        CaseEvent::ALL.into_iter().find(|e| e.contains(t, omega))
    }

    /// 1..=4.
    pub fn quadrant(self) -> u8 {
        match self {
            CaseEvent::A1 | CaseEvent::A2 => 1,
            CaseEvent::A3 | CaseEvent::A4 => 2,
            CaseEvent::A5 | CaseEvent::A6 => 3,
            CaseEvent::A7 | CaseEvent::A8 => 4,
        }
    }

    /// Street within `Ω` of the ego axis.
    pub fn is_near_axis(self) -> bool {
        matches!(self, CaseEvent::A1 | CaseEvent::A4 | CaseEvent::A5 | CaseEvent::A8)
    }
}

/// Trigonometric data of one crossing, with the two thresholds.
#[derive(Clone, Copy, Debug)]
struct Crossing {
    theta: f64,
    sin: f64,
    cos: f64,
    omega: f64,
    range: f64,
    c1: f64,
    c2: f64,
}

impl Crossing {
    fn new(theta: f64, omega: f64, range: f64) -> Self {
        let sin = theta.sin().abs();
        let cos = theta.cos().abs();
        let (so, co) = omega.sin_cos();
        Self {
            theta,
            sin,
            cos,
            omega,
            range,
            c1: range * so * (co / so - cos / sin),
            c2: range * so / sin,
        }
    }

    /// `d (|sinθ| cotΩ - |cosθ|)`: crossing of the near beam edge.
    fn near_edge(&self, d: f64) -> f64 {
        d * (self.sin / self.omega.tan() - self.cos)
    }

    /// `d |sin(θ ∓ Ω)| / sinΩ`, the edge-band form of [`Crossing::near_edge`].
    fn near_edge_shifted(&self, d: f64, event: CaseEvent) -> f64 {
        let shifted = match event {
            CaseEvent::A2 | CaseEvent::A6 => (self.theta - self.omega).sin(),
            _ => (self.theta + self.omega).sin(),
        };
        d * shifted.abs() / self.omega.sin()
    }

    /// `sqrt(R² - (d sinθ)²) - d |cosθ|`: crossing of the range arc.
    fn arc(&self, d: f64) -> f64 {
        let perp = d * self.sin;
        (self.range * self.range - perp * perp).max(0.0).sqrt() - d * self.cos
    }

    /// `d tanΩ / (|sinθ| - tanΩ |cosθ|)`: crossing of the far beam edge.
    fn far_edge(&self, d: f64) -> f64 {
        let t = self.omega.tan();
        d * t / (self.sin - t * self.cos)
    }

    /// `d / (|sinθ| cotΩ - |cosθ|)`: near end when the crossing is behind the ego.
    fn behind(&self, d: f64) -> f64 {
        d / (self.sin / self.omega.tan() - self.cos)
    }

    fn ahead_near_axis(&self, d: f64) -> InterferenceInterval {
        if d >= 0.0 && d < self.c2 {
            InterferenceInterval::bounded(self.near_edge(d), self.arc(d), IntervalCase::ArcAhead)
        } else {
            InterferenceInterval::empty(IntervalCase::Outside)
        }
    }

    fn behind_near_axis(&self, d: f64) -> InterferenceInterval {
        if d < 0.0 && d > self.c1 {
            InterferenceInterval::bounded(self.behind(d), self.arc(d), IntervalCase::Behind)
        } else {
            InterferenceInterval::empty(IntervalCase::Outside)
        }
    }

    fn edge_band(&self, d: f64, event: CaseEvent) -> InterferenceInterval {
        if !(d > 0.0 && d < self.c2) {
            return InterferenceInterval::empty(IntervalCase::Outside);
        }
        let a = self.near_edge_shifted(d, event);
        if d <= self.c1 {
            InterferenceInterval::bounded(a, self.far_edge(d), IntervalCase::EdgeAhead)
        } else {
            InterferenceInterval::bounded(a, self.arc(d), IntervalCase::EdgeArcAhead)
        }
    }
}

fn check_inputs(theta: f64, d: f64, omega: f64, range: f64) -> Result<()> {
    require_finite("theta", theta)?;
    require_finite("d", d)?;
    Beam::new(omega, range).map(|_| ())
}

/// Interfering interval on a BLCP street `(θ, ·)` crossing the ego street at
/// signed distance `d` from the ego radar at `(0, r0)`, any `r0`.
pub fn interval_blcp(theta: f64, d: f64, omega: f64, range: f64) -> Result<InterferenceInterval> {
    check_inputs(theta, d, omega, range)?;
    if theta.sin().abs() < PARALLEL_TOLERANCE {
        return Ok(InterferenceInterval::empty(IntervalCase::Parallel));
    }
    let x = Crossing::new(theta, omega, range);
    Ok(match CaseEvent::classify(theta, omega) {
        None => InterferenceInterval::empty(IntervalCase::Outside),
        Some(e) if e.is_near_axis() => {
            if d >= 0.0 {
                x.ahead_near_axis(d)
            } else {
                x.behind_near_axis(d)
            }
        }
        Some(e) => x.edge_band(d, e),
    })
}

/// Interfering interval on a PLCP street, ego at the origin, `u = r / sinθ`
/// with `r > 0`. Only the `(θ, u)` sign combinations reachable from the
/// Poisson domain carry interferers: crossings ahead for `θ ∈ (0, π)`,
/// behind for `θ ∈ (π, 2π)`.
pub fn interval_plcp(theta: f64, u: f64, omega: f64, range: f64) -> Result<InterferenceInterval> {
    check_inputs(theta, u, omega, range)?;
    if theta.sin().abs() < PARALLEL_TOLERANCE {
        return Ok(InterferenceInterval::empty(IntervalCase::Parallel));
    }
    let x = Crossing::new(theta, omega, range);
    Ok(match CaseEvent::classify(theta, omega) {
        Some(CaseEvent::A1 | CaseEvent::A4) => x.ahead_near_axis(u),
        Some(e @ (CaseEvent::A2 | CaseEvent::A3)) => x.edge_band(u, e),
        Some(CaseEvent::A5 | CaseEvent::A8) => x.behind_near_axis(u),
        Some(CaseEvent::A6 | CaseEvent::A7) | None => InterferenceInterval::empty(IntervalCase::Outside),
    })
}

/// Interval for `line` as seen from the ego at `(0, r0)`, together with the
/// crossing distance. `None` for lines parallel to the ego street.
pub fn interval_for_line(line: &LineParam, r0: f64, beam: Beam) -> Result<Option<(f64, InterferenceInterval)>> {
    let Some(d) = intersection_distance(line, r0) else {
        return Ok(None);
    };
    interval_blcp(line.theta, d, beam.omega, beam.range).map(|iv| Some((d, iv)))
}

/// Distance from the ego radar to a radar at interfering coordinate `v`.
pub fn ego_distance(d: f64, theta: f64, v: f64, is_ego_street: bool) -> f64 {
    if is_ego_street {
        v
    } else {
        (d + v * theta.cos().abs()).hypot(v * theta.sin())
    }
}

/// Maps the interfering coordinate `v` on a crossing street to the plane.
#[derive(Clone, Copy, Debug)]
pub struct CrossingFrame {
    pub d: f64,
    /// Crossing point with the ego street.
    pub origin: Point,
    /// Unit vector of increasing `v`; its y-component is `|cosθ| >= 0`.
    pub along: Point,
}

impl CrossingFrame {
    pub fn new(line: &LineParam, r0: f64) -> Option<Self> {
        let d = intersection_distance(line, r0)?;
        let a = line.direction();
        let sign = if line.theta.cos() < 0.0 { -1.0 } else { 1.0 };
        Some(Self {
            d,
            origin: Point::new(0.0, r0 + d),
            along: Point::new(sign * a.x, sign * a.y),
        })
    }

    pub fn point_at(&self, v: f64) -> Point {
        self.origin.add_scaled(self.along, v)
    }

    pub fn coordinate_of(&self, p: Point) -> f64 {
        p.sub(self.origin).dot(self.along)
    }
}

/// Set of `d` for which a street at angle `θ` can carry interferers, with the
/// `d` values where the interval changes form.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingSupport {
    pub d_lower: f64,
    pub d_upper: f64,
    pub kinks: Vec<f64>,
}

pub fn crossing_support(theta: f64, omega: f64, range: f64) -> Option<CrossingSupport> {
    if theta.sin().abs() < PARALLEL_TOLERANCE {
        return None;
    }
    let event = CaseEvent::classify(theta, omega)?;
    let x = Crossing::new(theta, omega, range);
    Some(if event.is_near_axis() {
        CrossingSupport {
            d_lower: x.c1.min(0.0),
            d_upper: x.c2,
            kinks: vec![0.0],
        }
    } else {
        CrossingSupport {
            d_lower: 0.0,
            d_upper: x.c2,
            kinks: vec![x.c1],
        }
    })
}

/// `θ` ranges, within `[0, 2π)`, holding every street that can interfere,
/// and the angles inside them where the interval changes form.
pub(crate) fn angular_support(omega: f64) -> (Vec<(f64, f64)>, Vec<f64>) {
    let w = 2.0 * omega;
    let ranges = vec![(0.0, w), (PI - w, PI + w), (TAU - w, TAU)];
    let kinks = vec![omega, PI - omega, PI, PI + omega, TAU - omega];
    (ranges, kinks)
}

/// Integrates `f(θ, r)` over crossing streets `θ ∈ [0, 2π)`, `r ∈ [r_min, r_max]`,
/// seen from the ego at `(0, r0)`, restricted to where the interval can be
/// non-empty. `f` must vanish outside that support.
pub(crate) fn integrate_crossings<F>(
    beam: Beam,
    r0: f64,
    r_min: f64,
    r_max: f64,
    tol: Tolerance,
    f: F,
) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let (ranges, kinks) = angular_support(beam.omega);
    let inner = |theta: f64| -> Result<f64> {
        let Some(support) = crossing_support(theta, beam.omega, beam.range) else {
            return Ok(0.0);
        };
        let s = theta.sin();
        let to_r = |d: f64| s * (d + r0);
        let (mut lo, mut hi) = (to_r(support.d_lower), to_r(support.d_upper));
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let lo = lo.max(r_min);
        let hi = hi.min(r_max);
        if lo >= hi {
            return Ok(0.0);
        }
        let breaks: Vec<f64> = support.kinks.iter().map(|&k| to_r(k)).collect();
        Ok(try_integrate(|r| f(theta, r), lo, hi, &breaks, tol)?.value)
    };
    let mut total = 0.0;
    for (lo, hi) in ranges {
        total += try_integrate(inner, lo, hi, &kinks, tol)?.value;
    }
    Ok(total)
}

/// Radial domain of the per-line average in the as-printed mean count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialLimit {
    /// `r ∈ [0, R_k]`, normalized by `2π R_k`.
    #[default]
    BeamRange,
    /// `r ∈ [0, R_g]`, the full generating domain.
    GeneratingRadius,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanInterferers {
    /// Expected interval length of one BLP street, `(1/2πR_g) ∫_0^{R_g} ∫ (b - a) dθ dr`.
    pub mean_interval_length: f64,
    /// Expected number of interferers on crossing streets, `λ n_B · mean_interval_length`.
    pub corrected: f64,
    /// The average interval length raised to `n_B` in [`Self::as_printed`].
    pub printed_average: f64,
    /// `λ (avg)^{n_B}` with the average taken over the chosen radial domain.
    /// Overflows to infinity once the average exceeds a few metres.
    pub as_printed: f64,
    /// Oncoming radars on the ego street, `λ · |ego interval|`.
    pub ego_street: f64,
}

const MEAN_TOLERANCE: Tolerance = Tolerance::new(1e-10, 1e-9);

/// Mean number of interferers seen by a BLCP ego radar at `(0, r0)`.
/// `radial` only affects [`MeanInterferers::as_printed`].
pub fn mean_interferers_blcp(
    r0: f64,
    lambda: f64,
    beam: Beam,
    target_range: f64,
    span: EgoStreetSpan,
    spec: &BlpSpec,
    radial: RadialLimit,
) -> Result<MeanInterferers> {
    require_finite("r0", r0)?;
    crate::error::require_non_negative("lambda", lambda)?;
    beam.validate()?;
    spec.validate()?;
    let total_length = |r_max: f64| {
        integrate_crossings(beam, r0, 0.0, r_max, MEAN_TOLERANCE, |theta, r| {
            let d = r / theta.sin() - r0;
            Ok(interval_blcp(theta, d, beam.omega, beam.range)?.length())
        })
    };
    let mean_interval_length = total_length(spec.r_g)? / (TAU * spec.r_g);
    let printed_average = match radial {
        RadialLimit::GeneratingRadius => mean_interval_length,
        RadialLimit::BeamRange => total_length(beam.range)? / (TAU * beam.range),
    };
    let n_b = spec.n_b as f64;
    Ok(MeanInterferers {
        mean_interval_length,
        corrected: lambda * n_b * mean_interval_length,
        printed_average,
        as_printed: lambda * printed_average.powf(n_b),
        ego_street: lambda * ego_street_interval(target_range, beam.range, span).length(),
    })
}

/// Mean number of interferers seen by a PLCP ego radar at the origin:
/// `λ (|ego interval| + λ_L ∫∫ (b - a) dθ dr)`.
pub fn mean_interferers_plcp(
    lambda: f64,
    lambda_l: f64,
    beam: Beam,
    target_range: f64,
    span: EgoStreetSpan,
) -> Result<f64> {
    crate::error::require_non_negative("lambda", lambda)?;
    crate::error::require_non_negative("lambda_l", lambda_l)?;
    beam.validate()?;
    let lines = integrate_crossings(beam, 0.0, 0.0, beam.range * beam.omega.sin(), MEAN_TOLERANCE, |theta, r| {
        Ok(interval_plcp(theta, r / theta.sin(), beam.omega, beam.range)?.length())
    })?;
    Ok(lambda * (ego_street_interval(target_range, beam.range, span).length() + lambda_l * lines))
}

#[derive(Debug, Serialize)]
struct IntervalRow {
    theta: f64,
    d: f64,
    a: f64,
    b: f64,
    empty: bool,
    case_id: String,
}

/// Rows of `theta,d,a,b,empty,case_id`. Parallel lines get `d = NaN`.
pub fn write_interval_csv<W: Write>(
    rows: impl IntoIterator<Item = (f64, f64, InterferenceInterval)>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (theta, d, iv) in rows {
        w.serialize(IntervalRow {
            theta,
            d,
            a: iv.a,
            b: iv.b,
            empty: iv.empty,
            case_id: iv.case.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}
