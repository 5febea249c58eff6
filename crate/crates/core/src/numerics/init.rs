use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor2;

/// Uniform fan-in/fan-out initialisation on `[-√(6/(r+c)), √(6/(r+c))]`.
pub fn init_params(rows: usize, cols: usize, seed: u64) -> Tensor2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    glorot_uniform(rows, cols, &mut rng)
}

pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor2 {
    assert!(rows >= 1 && cols >= 1, "init shape must be non-empty");
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Tensor2::from_vec(rows, cols, data).expect("shape matches data")
}
