#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

/// Φ̄ by the complementary error function from the C library.
pub fn q(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// Matched-filter error in the sphere model without touching any
/// `d`-dimensional vector.
///
/// With `V ~ N(0, β²/n I)`, `HᵀV = βg/√n` and `‖V‖² = β²(g² + χ²_{d−1})/n`,
/// and the conditional error is `Q((1 + HᵀV) / (β√(1 + 2HᵀV + ‖V‖²)))`.
/// Returns the mean and its standard error over `samples` draws.
pub fn matched_filter_oracle(d: usize, n: usize, beta: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi = ChiSquared::new((d - 1) as f64).unwrap();
    let nf = n as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let g: f64 = StandardNormal.sample(&mut rng);
        let c: f64 = chi.sample(&mut rng);
        let htv = beta * g / nf.sqrt();
        let v2 = beta * beta * (g * g + c) / nf;
        let val = q((1.0 + htv) / (beta * (1.0 + 2.0 * htv + v2).sqrt()));
        s += val;
        s2 += val * val;
    }
    let m = samples as f64;
    let mean = s / m;
    let var = (s2 - m * mean * mean) / (m - 1.0);
    (mean, (var / m).sqrt())
}

pub fn gaussian_vec<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn unit_vec<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let v = gaussian_vec(d, rng);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}
