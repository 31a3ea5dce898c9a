//! Shared helpers for the integration tests.
#![allow(dead_code)]

pub mod oracle;
pub mod quad;

use grouptest::PanelDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random panel with heterogeneous slopes and uniform noise.
pub fn random_panel(n: usize, t: usize, k: usize, seed: u64) -> PanelDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * t * k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let slopes: Vec<f64> = (0..n * k).map(|_| rng.random_range(0.5..1.5)).collect();
    let y = (0..n * t)
        .map(|r| {
            let i = r / t;
            (0..k).map(|c| slopes[i * k + c] * x[r * k + c]).sum::<f64>() + rng.random_range(-1.0..1.0)
        })
        .collect();
    PanelDataset::from_arrays(n, t, k, y, x).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
