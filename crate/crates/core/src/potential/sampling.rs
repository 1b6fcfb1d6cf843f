//! Halton points with a seeded Cranley-Patterson rotation.
//!
//! Point `i` depends only on `(i, seed)`, so samples can be generated in any
//! order (or in parallel) and reduced by index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131,
];

#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    shift: Vec<f64>,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

impl ScrambledHalton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(
            dim <= PRIMES.len(),
            "at most {} dimensions supported",
            PRIMES.len()
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            shift: (0..dim).map(|_| rng.gen::<f64>()).collect(),
        }
    }

    /// Unit-cube point `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, b)| (radical_inverse(i as u64 + 1, b) + s).fract())
            .collect()
    }

    /// Point `i` mapped into `∏ [-Lᵢ, Lᵢ]`.
    pub fn point_in_box(&self, i: usize, half_widths: &[f64]) -> Vec<f64> {
        self.point(i)
            .into_iter()
            .zip(half_widths)
            .map(|(u, l)| l * (2.0 * u - 1.0))
            .collect()
    }
}
