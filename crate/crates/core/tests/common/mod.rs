#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use wavetex::spectral::{self, Fft2, Image};

pub fn random_image(n: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_shape_fn((n, n), |_| rng.gen::<f64>())
}

pub fn norm(x: &Image) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn relative_error(a: &Image, b: &Image) -> f64 {
    norm(&(a - b)) / norm(b)
}

pub fn max_abs_diff(a: &Image, b: &Image) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Direct O(N⁴) circular convolution `(x∗f)(u) = Σ_v x(v) f(u − v)`.
pub fn brute_convolve(x: &Image, f: &Image) -> Image {
    let n = x.nrows();
    Image::from_shape_fn((n, n), |(u1, u2)| {
        let mut acc = 0.0;
        for v1 in 0..n {
            for v2 in 0..n {
                acc += x[[v1, v2]] * f[[(u1 + n - v1) % n, (u2 + n - v2) % n]];
            }
        }
        acc
    })
}

pub fn roll(x: &Image, s1: usize, s2: usize) -> Image {
    let n = x.nrows();
    Image::from_shape_fn((n, n), |(i, j)| x[[(i + n - s1) % n, (j + n - s2) % n]])
}

/// Gaussian-filtered white noise rescaled to `[0, 1]`.
pub fn micro_texture(n: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Image::from_shape_fn((n, n), |_| rng.gen::<f64>() - 0.5);
    let fft = Fft2::new(n);
    let g = spectral::sample(n, |a, b| Complex64::new((-2.0 * (a * a + b * b)).exp(), 0.0));
    let y = fft.convolve(&fft.forward(&w), &g);
    let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    y.mapv(|v| (v - lo) / (hi - lo))
}
