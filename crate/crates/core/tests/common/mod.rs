#![allow(dead_code)]

use convex_band::{Sign, SortedDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Noisy convex-ish data; roughly one instance in four has tied abscissae.
pub fn instance(rng: &mut ChaCha8Rng, n: usize) -> SortedDataset<f64> {
    let ties = rng.random_bool(0.25);
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = rng.random();
            if ties { (v * 8.0).round() / 8.0 } else { v }
        })
        .collect();
    x.sort_by(f64::total_cmp);
    let curv: f64 = rng.random_range(0.0..4.0);
    let y = x
        .iter()
        .map(|&t| curv * (t - 0.5) * (t - 0.5) + rng.random_range(-0.7..0.7))
        .collect();
    SortedDataset::new(x, y).unwrap()
}

pub fn kappa(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-0.3..1.6)
}

pub fn signs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Sign> {
    (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()
}
