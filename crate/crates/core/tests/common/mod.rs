#![allow(dead_code)]

use coxradar::cox::Heading;
use coxradar::interference::{interval_blcp, interval_plcp, CrossingFrame};
use coxradar::sector::{in_sector, mutually_visible, Beam, SectorSpec};
use coxradar::{LineParam, Point};

/// Ego radar at `(0, r0)` looking along `+y`.
pub fn ego_sector(r0: f64, beam: Beam) -> SectorSpec {
    SectorSpec::new(Point::new(0.0, r0), &LineParam::EGO_STREET, Heading::Forward, beam)
}

/// Literal predicate: some heading on `line` at coordinate `v` interferes.
pub fn interferes_at(line: &LineParam, frame: &CrossingFrame, ego: &SectorSpec, v: f64) -> bool {
    let p = frame.point_at(v);
    [Heading::Forward, Heading::Backward]
        .into_iter()
        .any(|h| mutually_visible(ego, p, line, h))
}

/// Sub-intervals of `[lo, hi]` where `pred` holds, from a scan of step `h`
/// refined by bisection to `1e-9`.
pub fn scan_runs(lo: f64, hi: f64, h: f64, pred: impl Fn(f64) -> bool) -> Vec<(f64, f64)> {
    let refine = |mut a: f64, mut b: f64, a_state: bool| {
        while b - a > 1e-9 {
            let m = 0.5 * (a + b);
            if pred(m) == a_state {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let n = ((hi - lo) / h).ceil() as usize;
    let mut runs = Vec::new();
    let mut prev_x = lo;
    let mut prev = pred(lo);
    let mut start = if prev { Some(lo) } else { None };
    for i in 1..=n {
        let x = (lo + i as f64 * h).min(hi);
        let cur = pred(x);
        if cur != prev {
            let edge = refine(prev_x, x, prev);
            if cur {
                start = Some(edge);
            } else {
                runs.push((start.take().unwrap(), edge));
            }
        }
        prev = cur;
        prev_x = x;
    }
    if let Some(s) = start {
        runs.push((s, hi));
    }
    runs
}

/// Which closed form is checked against the predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    Blcp,
    /// Ego at the origin, line in Poisson form.
    Plcp,
}

/// Compares the closed-form interval on `line` with the literal predicate.
/// Returns the largest endpoint discrepancy in metres, or `Err` with a
/// description when the two disagree on emptiness.
pub fn oracle_discrepancy(line: &LineParam, r0: f64, beam: Beam, step: f64) -> Result<f64, String> {
    oracle_discrepancy_for(ClosedForm::Blcp, line, r0, beam, step)
}

pub fn oracle_discrepancy_for(form: ClosedForm, line: &LineParam, r0: f64, beam: Beam, step: f64) -> Result<f64, String> {
    let Some(frame) = CrossingFrame::new(line, r0) else {
        return Ok(0.0);
    };
    let iv = match form {
        ClosedForm::Blcp => interval_blcp(line.theta, frame.d, beam.omega, beam.range),
        ClosedForm::Plcp => interval_plcp(line.theta, frame.d, beam.omega, beam.range),
    }
    .map_err(|e| e.to_string())?;
    let ego = ego_sector(r0, beam);
    // Interferers lie within R_k of the ego: scan the chord of a slightly larger disk.
    let runs = match line.chord_in_disk(ego.apex, beam.range + 1.0) {
        Some((s0, s1)) => {
            let (v0, v1) = (frame.coordinate_of(line.point_at(s0)), frame.coordinate_of(line.point_at(s1)));
            scan_runs(v0.min(v1), v0.max(v1), step, |v| interferes_at(line, &frame, &ego, v))
        }
        None => Vec::new(),
    };
    match (iv.empty, runs.as_slice()) {
        (true, []) => Ok(0.0),
        (false, [(a, b)]) => Ok((a - iv.a).abs().max((b - iv.b).abs())),
        (false, []) => {
            // Narrower than the scan step: the closed-form midpoint must interfere.
            let mid = 0.5 * (iv.a + iv.b);
            if iv.b - iv.a < step && interferes_at(line, &frame, &ego, mid) {
                Ok(0.0)
            } else {
                Err(format!("closed form [{}, {}] ({:?}) but predicate never holds", iv.a, iv.b, iv.case))
            }
        }
        (_, runs) => Err(format!("closed form {iv:?} vs predicate runs {runs:?} (d = {})", frame.d)),
    }
}

/// Same on the ego street: oncoming radars in `(R, R_k)` beyond the ego.
pub fn ego_street_runs(r0: f64, beam: Beam, step: f64) -> Vec<(f64, f64)> {
    let ego = ego_sector(r0, beam);
    scan_runs(-beam.range - 1.0, beam.range + 1.0, step, |v| {
        let p = Point::new(0.0, r0 + v);
        mutually_visible(&ego, p, &LineParam::EGO_STREET, Heading::Backward) && in_sector(p, &ego)
    })
}
