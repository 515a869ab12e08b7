//! Standard test functions, all with global minimum 0.

use std::f64::consts::PI;

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

pub type Benchmark = fn(&[f64]) -> f64;

/// Looks a benchmark up by name, with its conventional symmetric search bound.
pub fn by_name(name: &str) -> Option<(Benchmark, f64)> {
    match name {
        "sphere" => Some((sphere, 10.0)),
        "rosenbrock" => Some((rosenbrock, 5.0)),
        "rastrigin" => Some((rastrigin, 5.12)),
        _ => None,
    }
}

pub const NAMES: [&str; 3] = ["sphere", "rosenbrock", "rastrigin"];
