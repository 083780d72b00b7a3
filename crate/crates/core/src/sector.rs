//! Radar sectors and the mutual-interference predicate.
//!
//! A sector is the open cone of half-angle `Ω` around a boresight, cut at
//! range `R_k`. A vehicle interferes with the ego radar when each of the two
//! radars lies in the other's sector. This module is the geometric ground
//! truth that the closed-form intervals in [`crate::interference`] are
//! checked against, so it stays deliberately literal.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::cox::{Heading, NetworkRealization, VehiclePoint};
use crate::error::{require_positive, Error, Result};
use crate::geometry::{LineParam, Point};

/// Beam shape shared by every radar in the network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    /// Half-power half-beamwidth `Ω`, radians.
    pub omega: f64,
    /// Maximum interference range `R_k`, metres.
    pub range: f64,
}

impl Beam {
    pub fn new(omega: f64, range: f64) -> Result<Self> {
        let beam = Self { omega, range };
        beam.validate()?;
        Ok(beam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < FRAC_PI_2) {
            return Err(Error::invalid("omega", format!("must lie in (0, π/2), got {}", self.omega)));
        }
        require_positive("range", self.range)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSpec {
    pub apex: Point,
    /// Generating angle of the radar's street; fixes `a = (-sinθ, cosθ)`.
    pub theta: f64,
    pub orientation: Heading,
    pub beam: Beam,
}

impl SectorSpec {
    pub fn new(apex: Point, line: &LineParam, orientation: Heading, beam: Beam) -> Self {
        Self {
            apex,
            theta: line.theta,
            orientation,
            beam,
        }
    }

    pub fn boresight(&self) -> Point {
        self.orientation.boresight(&LineParam::new(self.theta, 0.0))
    }
}

/// `true` iff the angle between `p - apex` and the boresight is strictly
/// below `Ω` and `|p - apex| <= R_k`. The apex itself is outside: a zero
/// vector has no direction.
pub fn in_sector(p: Point, sector: &SectorSpec) -> bool {
    let offset = p.sub(sector.apex);
    let dist = offset.norm();
    if dist == 0.0 || dist > sector.beam.range {
        return false;
    }
    offset.dot(sector.boresight()) / dist > sector.beam.omega.cos()
}

/// Sector of the ego radar in `net`.
pub fn ego_sector(net: &NetworkRealization, beam: Beam) -> SectorSpec {
    SectorSpec::new(
        net.ego,
        &net.lines.lines[NetworkRealization::EGO_STREET],
        net.ego_heading,
        beam,
    )
}

/// Sector of a vehicle's radar, pointing along its own heading.
pub fn vehicle_sector(net: &NetworkRealization, v: &VehiclePoint, beam: Beam) -> SectorSpec {
    SectorSpec::new(v.position, net.line_of(v), v.heading, beam)
}

/// Mutual membership between a radar at `position` on `line` heading
/// `heading`, and the ego sector.
pub fn mutually_visible(ego: &SectorSpec, position: Point, line: &LineParam, heading: Heading) -> bool {
    let theirs = SectorSpec::new(position, line, heading, ego.beam);
    in_sector(ego.apex, &theirs) && in_sector(position, ego)
}

/// Vehicles that see the ego radar and are seen by it.
pub fn interfering_set<'a>(net: &'a NetworkRealization, beam: Beam) -> Vec<&'a VehiclePoint> {
    let ego = ego_sector(net, beam);
    net.vehicles
        .iter()
        .filter(|v| mutually_visible(&ego, v.position, net.line_of(v), v.heading))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cox::CoxModel;
    use crate::geometry::{LineDomain, LineSet};

    fn beam() -> Beam {
        Beam::new(15f64.to_radians(), 100.0).unwrap()
    }

    fn ego_street_sector() -> SectorSpec {
        SectorSpec::new(Point::new(0.0, 0.0), &LineParam::EGO_STREET, Heading::Forward, beam())
    }

    #[test]
    fn beam_validation() {
        assert!(Beam::new(0.0, 1.0).is_err());
        assert!(Beam::new(FRAC_PI_2, 1.0).is_err());
        assert!(Beam::new(0.1, -1.0).is_err());
    }

    #[test]
    fn boresight_point_inside() {
        assert!(in_sector(Point::new(0.0, 50.0), &ego_street_sector()));
        assert!(!in_sector(Point::new(0.0, -50.0), &ego_street_sector()));
    }

    #[test]
    fn angular_edge_is_excluded() {
        let s = ego_street_sector();
        let omega = s.beam.omega;
        // Slightly inside and slightly outside the edge; the edge itself is a
        // strict inequality.
        let inside = Point::new(40.0 * (omega - 1e-9).sin(), 40.0 * (omega - 1e-9).cos());
        let outside = Point::new(40.0 * (omega + 1e-9).sin(), 40.0 * (omega + 1e-9).cos());
        assert!(in_sector(inside, &s));
        assert!(!in_sector(outside, &s));
    }

    #[test]
    fn exact_edge_point_is_outside() {
        // Pythagorean triples give offsets whose cosine to the boresight is
        // exact; pick an Ω whose f64 cosine hits it exactly.
        let mut checked = 0;
        for (x, y, h) in [(3.0, 4.0, 5.0), (4.0, 3.0, 5.0), (24.0, 7.0, 25.0), (7.0, 24.0, 25.0)] {
            let c: f64 = y / h;
            let mut omega = c.acos();
            for _ in 0..8 {
                if omega.cos() == c {
                    break;
                }
                omega = if omega.cos() > c { omega + omega * f64::EPSILON } else { omega - omega * f64::EPSILON };
            }
            if omega.cos() != c || omega >= FRAC_PI_2 {
                continue;
            }
            let s = SectorSpec {
                beam: Beam::new(omega, 100.0).unwrap(),
                ..ego_street_sector()
            };
            assert!(!in_sector(Point::new(x, y), &s));
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn range_is_inclusive() {
        let s = ego_street_sector();
        assert!(in_sector(Point::new(0.0, 100.0), &s));
        assert!(!in_sector(Point::new(0.0, 100.0 + 1e-9), &s));
    }

    #[test]
    fn apex_is_outside() {
        assert!(!in_sector(Point::new(0.0, 0.0), &ego_street_sector()));
    }

    fn network(vehicles: Vec<VehiclePoint>) -> NetworkRealization {
        NetworkRealization {
            lines: LineSet {
                lines: vec![LineParam::EGO_STREET, LineParam::new(1.3, 40.0)],
                domain: LineDomain::Poisson,
            },
            vehicles,
            ego: Point::default(),
            ego_heading: Heading::Forward,
            target: Point::new(0.0, 15.0),
            target_range: 15.0,
            model: CoxModel::Plcp,
        }
    }

    #[test]
    fn facing_radars_on_ego_street_interfere() {
        let oncoming = VehiclePoint {
            line_index: 0,
            s: 60.0,
            position: Point::new(0.0, 60.0),
            heading: Heading::Backward,
        };
        let same_way = VehiclePoint {
            heading: Heading::Forward,
            ..oncoming
        };
        let behind = VehiclePoint {
            s: -30.0,
            position: Point::new(0.0, -30.0),
            heading: Heading::Forward,
            ..oncoming
        };
        let net = network(vec![oncoming, same_way, behind]);
        let set = interfering_set(&net, beam());
        assert_eq!(set, vec![&net.vehicles[0]]);
        assert!(interfering_set(&network(vec![]), beam()).is_empty());
    }
}
