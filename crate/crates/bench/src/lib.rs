//! Fixtures shared by the benchmarks.

use ndarray::{Array1, Array2};
use rand::Rng;

use boltzworld::rng::rng_from_seed;
use boltzworld::{DbmParams, RbmParams};

/// DBM with `N(0, 0.1²)` weights and zero biases.
pub fn random_dbm(visible: usize, hidden: &[usize], seed: u64) -> DbmParams {
    let mut rng = rng_from_seed(seed);
    let mut below = visible;
    let mut weights = Vec::with_capacity(hidden.len());
    for &h in hidden {
        weights.push(RbmParams::random(below, h, 0.1, &mut rng).weights);
        below = h;
    }
    let biases = hidden.iter().map(|&h| Array1::zeros(h)).collect();
    DbmParams::new(weights, Array1::zeros(visible), biases).expect("consistent shapes")
}

/// `n × visible` matrix of fair coin flips.
pub fn random_batch(n: usize, visible: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    Array2::from_shape_fn((n, visible), |_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
}
