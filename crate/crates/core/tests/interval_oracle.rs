mod common;

use coxradar::geometry::{sample_blp, sample_plp};
use coxradar::interference::{interval_plcp, CrossingFrame};
use coxradar::rng::{substream, Purpose};
use coxradar::{Beam, BlpSpec, LineParam, PlpSpec};
use rand::Rng;

use common::{ego_street_runs, oracle_discrepancy};

#[test]
fn blcp_intervals_match_predicate_on_random_lines() {
    let mut rng = substream(11, Purpose::Target, 0);
    for i in 0..300 {
        let omega = rng.random_range(1.0f64..20.0).to_radians();
        let beam = Beam::new(omega, rng.random_range(50.0..800.0)).unwrap();
        let r0 = rng.random_range(-2000.0..2000.0);
        let lines = sample_blp(&BlpSpec { n_b: 20, r_g: 2500.0 }, 100 + i).unwrap();
        for line in lines.iter() {
            let err = oracle_discrepancy(line, r0, beam, 0.05).unwrap();
            assert!(err < 1e-6, "line {line:?} r0 {r0}: {err}");
        }
    }
}

#[test]
fn near_axis_lines_are_exercised() {
    // Random lines rarely fall within 2Ω of the axis; sweep them directly.
    let beam = Beam::new(10f64.to_radians(), 300.0).unwrap();
    let mut nonempty = 0;
    for k in 0..720 {
        let theta = std::f64::consts::TAU * (k as f64 + 0.37) / 720.0;
        for &r in &[-60.0, -13.0, -1.0, 0.5, 7.0, 29.0, 55.0] {
            let line = LineParam::new(theta, r);
            let err = oracle_discrepancy(&line, 0.0, beam, 0.05).unwrap();
            assert!(err < 1e-6, "θ {theta}, r {r}: {err}");
            if let Some(f) = CrossingFrame::new(&line, 0.0) {
                if !coxradar::interval_blcp(theta, f.d, beam.omega, beam.range).unwrap().empty {
                    nonempty += 1;
                }
            }
        }
    }
    assert!(nonempty > 100);
}

#[test]
fn plcp_intervals_coincide_with_blcp_on_poisson_domain() {
    let beam = Beam::new(7.5f64.to_radians(), 500.0).unwrap();
    for seed in 0..50 {
        let lines = sample_plp(&PlpSpec { lambda_l: 0.01, window_radius: 500.0 }, seed).unwrap();
        for line in lines.iter() {
            let Some(f) = CrossingFrame::new(line, 0.0) else { continue };
            let p = interval_plcp(line.theta, f.d, beam.omega, beam.range).unwrap();
            let b = coxradar::interval_blcp(line.theta, f.d, beam.omega, beam.range).unwrap();
            assert_eq!((p.empty, p.a, p.b), (b.empty, b.a, b.b));
        }
    }
}

#[test]
fn ego_street_predicate_interval() {
    let beam = Beam::new(7.5f64.to_radians(), 500.0).unwrap();
    let runs = ego_street_runs(0.0, beam, 0.05);
    assert_eq!(runs.len(), 1);
    assert!(runs[0].0.abs() < 1e-6 && (runs[0].1 - 500.0).abs() < 1e-6, "{runs:?}");
}
