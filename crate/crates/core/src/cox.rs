//! Vehicles as 1-D Poisson point processes on the lines, and the
//! Palm-conditioned network seen from the ego radar.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_non_negative, require_positive, Error, Result};
use crate::geometry::{LineDomain, LineParam, LineSet, Point};
use crate::rng::{substream, Purpose};

/// Travel direction relative to the line direction `a = (-sinθ, cosθ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    #[serde(rename = "+a")]
    Forward,
    #[serde(rename = "-a")]
    Backward,
}

impl Heading {
    pub fn sign(self) -> f64 {
        match self {
            Heading::Forward => 1.0,
            Heading::Backward => -1.0,
        }
    }

    pub fn reversed(self) -> Heading {
        match self {
            Heading::Forward => Heading::Backward,
            Heading::Backward => Heading::Forward,
        }
    }

    /// Boresight unit vector for a radar on `line` with this heading.
    pub fn boresight(self, line: &LineParam) -> Point {
        let a = line.direction();
        Point::new(self.sign() * a.x, self.sign() * a.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoxModel {
    Plcp,
    Blcp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehiclePoint {
    pub line_index: usize,
    /// Arc length from the line's foot of perpendicular, along `a`.
    pub s: f64,
    pub position: Point,
    pub heading: Heading,
}

/// Disk outside of which no vehicle is materialized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub center: Point,
    pub radius: f64,
}

/// Places an independent PPP of intensity `lambda` on the chord of each line
/// inside `window`, with headings drawn uniformly from `{+a, -a}`.
///
/// `line_index` in the output indexes `lines`. The draws for line `i` come
/// from their own substream, so they do not depend on the other lines.
pub fn populate(lines: &LineSet, lambda: f64, window: &Window, seed: u64) -> Result<Vec<VehiclePoint>> {
    require_non_negative("lambda", lambda)?;
    require_positive("window.radius", window.radius)?;
    let mut vehicles = Vec::new();
    if lambda == 0.0 {
        return Ok(vehicles);
    }
    for (i, line) in lines.iter().enumerate() {
        let mut rng = substream(seed, Purpose::Vehicles, i as u64);
        place_on_line(&mut vehicles, line, i, lambda, window, &mut rng)?;
    }
    Ok(vehicles)
}

fn place_on_line<R: Rng>(
    out: &mut Vec<VehiclePoint>,
    line: &LineParam,
    line_index: usize,
    lambda: f64,
    window: &Window,
    rng: &mut R,
) -> Result<()> {
    let Some((lo, hi)) = line.chord_in_disk(window.center, window.radius) else {
        return Ok(());
    };
    let mean = lambda * (hi - lo);
    if mean <= 0.0 {
        return Ok(());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("lambda", e.to_string()))?
        .sample(rng) as usize;
    out.reserve(count);
    for _ in 0..count {
        let s = lo + (hi - lo) * rng.random::<f64>();
        let heading = if rng.random::<bool>() {
            Heading::Forward
        } else {
            Heading::Backward
        };
        out.push(VehiclePoint {
            line_index,
            s,
            position: line.point_at(s),
            heading,
        });
    }
    Ok(())
}

/// How the ego radar and its street are placed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PalmConfig {
    pub model: CoxModel,
    /// Ego position is `(0, r0)`; must be 0 for PLCP.
    pub r0: f64,
    /// Radar intensity per direction of travel. Every street, the ego
    /// street included, carries two-way traffic of total intensity `2λ`.
    pub lambda: f64,
    /// Vehicles are materialized within this distance of the ego.
    pub extent: f64,
    /// Distance from the ego to the target along the ego boresight.
    pub target_range: f64,
    pub ego_heading: Heading,
}

/// A sampled street network with its vehicles, conditioned on the ego radar.
///
/// `lines.lines[0]` is the ego street `L0` (the y-axis); vehicle `line_index`
/// values refer to that vector.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkRealization {
    pub lines: LineSet,
    pub vehicles: Vec<VehiclePoint>,
    pub ego: Point,
    pub ego_heading: Heading,
    pub target: Point,
    pub target_range: f64,
    pub model: CoxModel,
}

impl NetworkRealization {
    pub const EGO_STREET: usize = 0;

    pub fn ego_boresight(&self) -> Point {
        self.ego_heading.boresight(&self.lines.lines[Self::EGO_STREET])
    }

    pub fn line_of(&self, v: &VehiclePoint) -> &LineParam {
        &self.lines.lines[v.line_index]
    }

    pub fn r0(&self) -> f64 {
        self.ego.y
    }

    /// Lines other than the ego street.
    pub fn crossing_lines(&self) -> &[LineParam] {
        &self.lines.lines[1..]
    }
}

impl PalmConfig {
    pub fn validate(&self) -> Result<()> {
        require_finite("r0", self.r0)?;
        if self.model == CoxModel::Plcp && self.r0 != 0.0 {
            return Err(Error::invalid("r0", "the PLCP ego radar sits at the origin"));
        }
        require_non_negative("lambda", self.lambda)?;
        require_positive("extent", self.extent)?;
        require_positive("target_range", self.target_range)
    }
}

/// Adds the ego street `L0` through `(0, r0)` with its own vehicle process,
/// places the ego and the target, and populates `lines` unchanged.
pub fn palm_condition(lines: &LineSet, cfg: &PalmConfig, seed: u64) -> Result<NetworkRealization> {
    cfg.validate()?;
    let expected = match cfg.model {
        CoxModel::Plcp => LineDomain::Poisson,
        CoxModel::Blcp => LineDomain::Binomial,
    };
    if lines.domain != expected {
        return Err(Error::invalid("lines", format!("{:?} needs a {:?} line set", cfg.model, expected)));
    }

    let ego = Point::new(0.0, cfg.r0);
    let window = Window {
        center: ego,
        radius: cfg.extent,
    };
    let total = 2.0 * cfg.lambda;

    let mut all_lines = Vec::with_capacity(lines.len() + 1);
    all_lines.push(LineParam::EGO_STREET);
    all_lines.extend_from_slice(&lines.lines);

    let mut vehicles = Vec::new();
    if total > 0.0 {
        let mut rng = substream(seed, Purpose::EgoStreet, 0);
        place_on_line(&mut vehicles, &LineParam::EGO_STREET, 0, total, &window, &mut rng)?;
        for mut v in populate(lines, total, &window, seed)? {
            v.line_index += 1;
            vehicles.push(v);
        }
    }

    let boresight = cfg.ego_heading.boresight(&LineParam::EGO_STREET);
    Ok(NetworkRealization {
        lines: LineSet {
            lines: all_lines,
            domain: lines.domain,
        },
        vehicles,
        ego,
        ego_heading: cfg.ego_heading,
        target: ego.add_scaled(boresight, cfg.target_range),
        target_range: cfg.target_range,
        model: cfg.model,
    })
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct VehicleRow {
    pub line_index: usize,
    pub theta: f64,
    pub r: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub heading: Heading,
}

/// One row per vehicle: `line_index,theta,r,s,x,y,heading`.
pub fn write_realization_csv<W: Write>(net: &NetworkRealization, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for v in &net.vehicles {
        let line = net.line_of(v);
        w.serialize(VehicleRow {
            line_index: v.line_index,
            theta: line.theta,
            r: line.r,
            s: v.s,
            x: v.position.x,
            y: v.position.y,
            heading: v.heading,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_realization_csv<R: Read>(input: R) -> Result<Vec<VehicleRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
