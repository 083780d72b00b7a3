//! Regenerates `fixtures/synthetic_cities`: invented city summaries used to
//! exercise the fitting pipeline. None of the numbers are measurements.
//!
//! `cargo run -p coxradar-cli --example synthetic_cities -- <out_dir>`

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use coxradar::geometry::expected_length_in_box;
use coxradar::rng::{substream, Purpose};
use rand::Rng;

struct City {
    name: &'static str,
    n_b: f64,
    r_g: f64,
    lambda_l: f64,
    fleet: f64,
    road_m: f64,
    /// Heights of the morning and evening congestion peaks, percent.
    peaks: (f64, f64),
}

const CITIES: [City; 4] = [
    City { name: "delhi", n_b: 662.0, r_g: 12_960.0, lambda_l: 0.004, fleet: 3.5e6, road_m: 3.0e7, peaks: (45.0, 55.0) },
    City { name: "paris", n_b: 900.0, r_g: 9_000.0, lambda_l: 0.0052, fleet: 2.5e6, road_m: 1.5e7, peaks: (50.0, 60.0) },
    City { name: "washington", n_b: 520.0, r_g: 11_000.0, lambda_l: 0.0053, fleet: 1.2e6, road_m: 1.3e7, peaks: (35.0, 45.0) },
    City { name: "johannesburg", n_b: 400.0, r_g: 15_000.0, lambda_l: 0.0037, fleet: 1.0e6, road_m: 1.6e7, peaks: (30.0, 40.0) },
];

fn circular(h: f64, center: f64) -> f64 {
    let d = (h - center).rem_euclid(24.0);
    d.min(24.0 - d)
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/synthetic_cities".into()));
    for (k, c) in CITIES.iter().enumerate() {
        let dir = out.join(c.name);
        fs::create_dir_all(&dir).unwrap();
        let mut rng = substream(2024, Purpose::Target, k as u64);

        let mut curve = String::from("box_side_m,total_length_m\n");
        for i in 0..16 {
            let side = 1000.0 * 150f64.powf(i as f64 / 15.0);
            let noise = 1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0);
            let length = expected_length_in_box(c.n_b, c.r_g, side).unwrap() * noise;
            curve += &format!("{side:.3},{length:.3}\n");
        }
        fs::write(dir.join("street_curve.csv"), curve).unwrap();

        let mut congestion = String::from("hour,congestion_pct\n");
        for h in 0..24 {
            let h_f = h as f64;
            let g = |center: f64, width: f64| (-circular(h_f, center).powi(2) / width).exp();
            let pct = 4.0 + c.peaks.0 * g(8.5, 4.0) + c.peaks.1 * g(17.5, 5.0) + 10.0 * g(21.0, 8.0);
            congestion += &format!("{h},{pct:.1}\n");
        }
        fs::write(dir.join("congestion.csv"), congestion).unwrap();

        fs::write(
            dir.join("city_meta.csv"),
            format!(
                "street_density_per_area,fleet_size,road_length_m\n{:.9},{},{}\n",
                c.lambda_l * PI,
                c.fleet,
                c.road_m
            ),
        )
        .unwrap();
    }
}
