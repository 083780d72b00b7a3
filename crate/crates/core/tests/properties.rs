use std::f64::consts::{PI, TAU};

use coxradar::cityfit::{fit_blp_params, hourly_lambda, CongestionProfile, StreetLengthCurve};
use coxradar::detection::{p_d_blcp, p_d_plcp, RadarConfig};
use coxradar::{interval_blcp, interval_plcp, BlpSpec};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn interval_lies_within_range_of_crossing(
        theta in 0.0..TAU,
        d in -1500.0f64..1500.0,
        omega_deg in 1.0f64..45.0,
        range in 50.0f64..1000.0,
    ) {
        let iv = interval_blcp(theta, d, omega_deg.to_radians(), range).unwrap();
        if !iv.empty {
            prop_assert!(iv.a < iv.b);
            // Every interferer is within the interference range of the ego.
            let (s, c) = (theta.sin().abs(), theta.cos().abs());
            for v in [iv.a, iv.b] {
                prop_assert!((d + v * c).hypot(v * s) <= range * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn interval_scales_with_length(
        theta in 0.0..TAU,
        d in -1000.0f64..1000.0,
        omega_deg in 1.0f64..45.0,
        range in 50.0f64..1000.0,
        k in 0.1f64..10.0,
    ) {
        let omega = omega_deg.to_radians();
        let base = interval_blcp(theta, d, omega, range).unwrap();
        let scaled = interval_blcp(theta, k * d, omega, k * range).unwrap();
        prop_assert_eq!(base.empty, scaled.empty);
        if !base.empty {
            prop_assert!(close(k * base.a, scaled.a, 1e-9));
            prop_assert!(close(k * base.b, scaled.b, 1e-9));
        }
    }

    #[test]
    fn interval_is_mirror_symmetric(
        theta in 0.0..TAU,
        d in -1000.0f64..1000.0,
        omega_deg in 1.0f64..45.0,
        range in 50.0f64..1000.0,
    ) {
        let omega = omega_deg.to_radians();
        let mirrored = (PI - theta).rem_euclid(TAU);
        let a = interval_blcp(theta, d, omega, range).unwrap();
        let b = interval_blcp(mirrored, d, omega, range).unwrap();
        prop_assert_eq!(a.empty, b.empty);
        if !a.empty {
            prop_assert!(close(a.a, b.a, 1e-9) && close(a.b, b.b, 1e-9), "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn plcp_interval_agrees_with_blcp_where_reachable(
        theta in 0.0..TAU,
        r in 0.001f64..1000.0,
        omega_deg in 1.0f64..45.0,
        range in 50.0f64..1000.0,
    ) {
        prop_assume!(theta.sin().abs() > 1e-6);
        let omega = omega_deg.to_radians();
        let u = r / theta.sin();
        let p = interval_plcp(theta, u, omega, range).unwrap();
        let b = interval_blcp(theta, u, omega, range).unwrap();
        prop_assert_eq!((p.empty, p.a, p.b), (b.empty, b.a, b.b));
    }
}

fn radar(omega_deg: f64, target_range: f64) -> RadarConfig {
    RadarConfig {
        omega: omega_deg.to_radians(),
        target_range,
        ..RadarConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn detection_probability_is_a_probability(
        beta_db in -40.0f64..60.0,
        omega_deg in 1.0f64..30.0,
        target_range in 1.0f64..200.0,
        lambda in 0.0f64..0.1,
        lambda_l in 0.0f64..0.05,
        n_b in 0usize..800,
        r0 in -5000.0f64..5000.0,
    ) {
        let cfg = radar(omega_deg, target_range);
        let p = p_d_plcp(beta_db, &cfg, lambda_l, lambda).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let q = p_d_blcp(r0, beta_db, &cfg, &BlpSpec { n_b, r_g: 1500.0 }, lambda).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn detection_depends_on_threshold_over_rcs_only(
        beta_db in -10.0f64..30.0,
        shift_db in -20.0f64..20.0,
        power_dbm in -10.0f64..40.0,
    ) {
        let cfg = RadarConfig::default();
        let shifted = RadarConfig {
            sigma_bar_dbsm: cfg.sigma_bar_dbsm + shift_db,
            p_dbm: power_dbm,
            ..cfg
        };
        let p = p_d_plcp(beta_db, &cfg, 0.01, 0.01).unwrap();
        let q = p_d_plcp(beta_db + shift_db, &shifted, 0.01, 0.01).unwrap();
        prop_assert!(close(p, q, 1e-7), "{} vs {}", p, q);
        let spec = BlpSpec { n_b: 300, r_g: 1500.0 };
        let p = p_d_blcp(0.0, beta_db, &cfg, &spec, 0.01).unwrap();
        let q = p_d_blcp(0.0, beta_db + shift_db, &shifted, &spec, 0.01).unwrap();
        prop_assert!(close(p, q, 1e-7), "{} vs {}", p, q);
    }

    #[test]
    fn street_length_fit_is_scale_consistent(
        n_b in 50.0f64..3000.0,
        r_g in 1000.0f64..20_000.0,
        k in 0.5f64..3.0,
    ) {
        let sides: Vec<f64> = (0..16).map(|i| r_g * 0.05 * 1.4f64.powi(i)).collect();
        let curve = StreetLengthCurve::from_model(n_b, r_g, &sides).unwrap();
        let fit = fit_blp_params(&curve).unwrap();
        let scaled = fit_blp_params(&curve.scaled(k).unwrap()).unwrap();
        prop_assert!(close(fit.n_b_continuous, scaled.n_b_continuous, 1e-6));
        prop_assert!(close(k * fit.r_g, scaled.r_g, 1e-6));
        prop_assert!(close(fit.n_b_continuous, n_b, 1e-6) && close(fit.r_g, r_g, 1e-6));
    }

    #[test]
    fn hourly_intensity_is_linear(
        congestion in proptest::collection::vec(0.0f64..100.0, 24),
        fleet in 1e4f64..1e7,
        factor in 0.1f64..10.0,
    ) {
        prop_assume!(congestion.iter().any(|&c| c > 0.0));
        let profile = CongestionProfile {
            congestion: congestion.clone(),
            c_max: None,
            lambda_max: None,
            fleet_size: fleet,
            road_length_total: 1e7,
            peak_occupancy_fraction: 0.08,
        };
        let base = hourly_lambda(&profile).unwrap();
        let more = hourly_lambda(&CongestionProfile { fleet_size: factor * fleet, ..profile.clone() }).unwrap();
        let c_max = congestion.iter().cloned().fold(0.0, f64::max);
        for ((b, m), c) in base.iter().zip(&more).zip(&congestion) {
            prop_assert!(close(factor * b, *m, 1e-12));
            prop_assert!(close(*b, 0.08 * fleet / 1e7 * c / c_max, 1e-12));
        }
    }
}
