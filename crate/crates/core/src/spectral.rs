//! Square DFT grids: cached 2-D FFT plans and frequency bookkeeping.
//!
//! Spectra are stored in natural DFT order, so entry `(k1, k2)` holds the
//! frequency `ω = 2π·(s(k1), s(k2))/N` where `s(k) = k` for `k < N/2` and
//! `k − N` otherwise. Every frequency therefore lies in `[−π, π)²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Real N×N map (image, coefficient map, spatial filter).
pub type Image = Array2<f64>;
/// Complex N×N frequency-domain array.
pub type Spectrum = Array2<Complex64>;

/// Signed frequency index for DFT bin `k` on a length-`n` axis.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular frequency (radians/pixel) of DFT bin `k`.
#[inline]
pub fn frequency(k: usize, n: usize) -> f64 {
    2.0 * PI * signed_index(k, n) as f64 / n as f64
}

/// DFT bin holding `−ω` for bin `k`.
#[inline]
pub fn mirror(k: usize, n: usize) -> usize {
    (n - k) % n
}

/// Evaluates `f(ω1, ω2)` on every grid frequency.
pub fn sample<F>(n: usize, f: F) -> Spectrum
where
    F: Fn(f64, f64) -> Complex64,
{
    Array2::from_shape_fn((n, n), |(a, b)| f(frequency(a, n), frequency(b, n)))
}

/// Replaces `s` by `(s(ω) + conj(s(−ω)))/2` so its inverse transform is real.
///
/// Only the Nyquist row/column can change for spectra sampled from a
/// Hermitian formula, since elsewhere `−ω` is itself a sampled frequency.
pub fn hermitian_symmetrize(s: &mut Spectrum) {
    let n = s.nrows();
    let orig = s.clone();
    for a in 0..n {
        for b in 0..n {
            let m = orig[[mirror(a, n), mirror(b, n)]].conj();
            s[[a, b]] = (orig[[a, b]] + m) * 0.5;
        }
    }
}

/// Largest `|Im|` relative to the largest `|Re|` of the inverse transform.
pub fn imaginary_ratio(fft: &Fft2, s: &Spectrum) -> f64 {
    let spatial = fft.inverse(s);
    let re = spatial.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    let im = spatial.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if re == 0.0 {
        im
    } else {
        im / re
    }
}

/// Moves the zero-frequency / origin sample to the array centre.
pub fn fftshift<T: Clone>(a: &Array2<T>) -> Array2<T> {
    let (h, w) = a.dim();
    Array2::from_shape_fn((h, w), |(i, j)| a[[(i + h - h / 2) % h, (j + w - w / 2) % w]].clone())
}

/// Cached forward/inverse plans for an N×N complex FFT.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            backward: planner.plan_fft_inverse(n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn check(&self, x: &Image) -> Result<()> {
        if x.dim() != (self.n, self.n) {
            return Err(Error::ShapeMismatch {
                expected: (self.n, self.n),
                actual: x.dim(),
            });
        }
        Ok(())
    }

    fn transform(&self, data: &mut Vec<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // rows, transpose, rows, transpose
        plan.process(data);
        transpose_square(data, n);
        plan.process(data);
        transpose_square(data, n);
    }

    /// DFT of a real map.
    pub fn forward(&self, x: &Image) -> Spectrum {
        let mut data: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        Array2::from_shape_vec((self.n, self.n), data).expect("square buffer")
    }

    pub fn forward_complex(&self, x: &Spectrum) -> Spectrum {
        let mut data: Vec<Complex64> = x.iter().copied().collect();
        self.transform(&mut data, &self.forward);
        Array2::from_shape_vec((self.n, self.n), data).expect("square buffer")
    }

    /// Normalised inverse DFT.
    pub fn inverse(&self, s: &Spectrum) -> Spectrum {
        let mut data: Vec<Complex64> = s.iter().copied().collect();
        self.transform(&mut data, &self.backward);
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
        Array2::from_shape_vec((self.n, self.n), data).expect("square buffer")
    }

    /// Real part of the normalised inverse DFT.
    pub fn inverse_real(&self, s: &Spectrum) -> Image {
        self.inverse(s).mapv(|c| c.re)
    }

    /// Circular convolution `x ∗ f` where `f` is given by its spectrum.
    pub fn convolve(&self, x_hat: &Spectrum, filter: &Spectrum) -> Image {
        let mut prod = x_hat.clone();
        Zip::from(&mut prod).and(filter).for_each(|p, &f| *p *= f);
        self.inverse_real(&prod)
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
