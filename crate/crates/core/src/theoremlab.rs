//! One-dimensional checks of how ReLU correlations of even and odd wavelets
//! separate signed Diracs and steps, plus a grid check of the odd-wavelet
//! scale-sum inequality behind the summed-bank frame.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filterbank::{Family, FilterBank, FilterKey, Parity};
use crate::transform::relu;

/// Smallest supported 1-D signal length.
pub const MIN_LENGTH: usize = 16;

/// Window width used by [`theorem1_report`] callers that take defaults; at
/// `σ = 4` the even-wavelet Dirac separation drops to about `2e-4` relative.
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_XI: f64 = PI / 2.0;
pub const DEFAULT_LENGTH: usize = 256;

/// Tolerance for the exact equalities.
pub const EQUALITY_TOL: f64 = 1e-10;

/// Separation threshold relative to `‖C‖_F`.
pub const SEPARATION_REL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SignalKind {
    Dirac,
    Step,
    Wavelet(Parity),
    Custom,
}

/// Samples on the circular grid `t ∈ [−n/2, n/2)`, stored in DFT order
/// (index `k` holds `t = k` for `k < n/2` and `k − n` otherwise).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Signal1D {
    pub samples: Vec<f64>,
    pub description: SignalKind,
}

fn time(k: usize, n: usize) -> f64 {
    crate::spectral::signed_index(k, n) as f64
}

fn check_length(n: usize) -> Result<()> {
    if n < MIN_LENGTH {
        return Err(Error::InvalidConfig(format!("signal length {n} below {MIN_LENGTH}")));
    }
    Ok(())
}

impl Signal1D {
    pub fn custom(samples: Vec<f64>) -> Result<Self> {
        check_length(samples.len())?;
        Ok(Self {
            samples,
            description: SignalKind::Custom,
        })
    }

    /// Unit sample at `t = 0`.
    pub fn dirac(n: usize) -> Result<Self> {
        check_length(n)?;
        let mut samples = vec![0.0; n];
        samples[0] = 1.0;
        Ok(Self {
            samples,
            description: SignalKind::Dirac,
        })
    }

    /// `1` for `t > 0`, `1/2` at `t = 0`, `0` for `t < 0`.
    pub fn step(n: usize) -> Result<Self> {
        check_length(n)?;
        let samples = (0..n)
            .map(|k| {
                let t = time(k, n);
                if t > 0.0 {
                    1.0
                } else if t == 0.0 {
                    0.5
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            samples,
            description: SignalKind::Step,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self {
            samples: self.samples.iter().map(|v| -v).collect(),
            description: self.description,
        }
    }

    /// Value at `−t` for every `t`.
    pub fn reflected(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|k| self.samples[(n - k) % n]).collect()
    }
}

/// Gaussian-windowed cosine (even) or sine (odd) with `g(t) = exp(−t²/2σ²)`.
/// The even wavelet is made zero-mean by subtracting a multiple of `g`; the
/// odd wavelet's unpaired sample at `t = −n/2` is zeroed so it is exactly
/// antisymmetric.
pub fn wavelet_1d(parity: Parity, sigma: f64, xi: f64, n: usize) -> Result<Signal1D> {
    check_length(n)?;
    if !(xi > 0.0 && xi < PI) {
        return Err(Error::InvalidConfig(format!("central frequency {xi} outside (0, π)")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("window sigma {sigma} must be positive")));
    }
    let g: Vec<f64> = (0..n)
        .map(|k| {
            let t = time(k, n);
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let samples = match parity {
        Parity::Even => {
            let raw: Vec<f64> = (0..n).map(|k| g[k] * (xi * time(k, n)).cos()).collect();
            let c = raw.iter().sum::<f64>() / g.iter().sum::<f64>();
            raw.iter().zip(&g).map(|(r, w)| r - c * w).collect()
        }
        Parity::Odd => {
            let mut s: Vec<f64> = (0..n).map(|k| g[k] * (xi * time(k, n)).sin()).collect();
            s[n / 2] = 0.0;
            s
        }
    };
    Ok(Signal1D {
        samples,
        description: SignalKind::Wavelet(parity),
    })
}

/// Circular convolution via FFT.
pub fn convolve_1d(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut a: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut b: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    a.iter().map(|c| c.re / n as f64).collect()
}

/// `C(γ, γ′)` with rows/columns ordered `γ = +1, −1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Corr2x2 {
    pub values: [[f64; 2]; 2],
}

impl Corr2x2 {
    pub fn get(&self, gamma: f64, gamma_prime: f64) -> f64 {
        let idx = |g: f64| if g > 0.0 { 0 } else { 1 };
        self.values[idx(gamma)][idx(gamma_prime)]
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Corr2x2) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let d = self.values[a][b] - other.values[a][b];
                s += d * d;
            }
        }
        s.sqrt()
    }

    /// Entry-wise `C(−γ, −γ′)`.
    pub fn sign_swapped(&self) -> Corr2x2 {
        let v = self.values;
        Corr2x2 {
            values: [[v[1][1], v[1][0]], [v[0][1], v[0][0]]],
        }
    }
}

/// `Σ_t σ(γ f(t)) σ(γ′ f(t))` over the samples selected by `mask`.
pub fn relu_correlation(f: &[f64], mask: impl Fn(usize) -> bool) -> Corr2x2 {
    let mut values = [[0.0; 2]; 2];
    for (a, ga) in [1.0, -1.0].into_iter().enumerate() {
        for (b, gb) in [1.0, -1.0].into_iter().enumerate() {
            values[a][b] = f
                .iter()
                .enumerate()
                .filter(|(k, _)| mask(*k))
                .map(|(_, &v)| relu(ga * v) * relu(gb * v))
                .sum();
        }
    }
    Corr2x2 { values }
}

/// Riemann sum of ReLU products of `y ∗ w` over the whole circle.
pub fn corr_matrix_1d(y: &Signal1D, w: &Signal1D) -> Result<Corr2x2> {
    if y.len() != w.len() {
        return Err(Error::ShapeMismatch {
            expected: (1, y.len()),
            actual: (1, w.len()),
        });
    }
    Ok(relu_correlation(&convolve_1d(&y.samples, &w.samples), |_| true))
}

/// Same as [`corr_matrix_1d`] but summed over `|t| < n/4` only, which keeps
/// the circular wrap of a step out of the sum.
pub fn corr_matrix_1d_central(y: &Signal1D, w: &Signal1D) -> Result<Corr2x2> {
    if y.len() != w.len() {
        return Err(Error::ShapeMismatch {
            expected: (1, y.len()),
            actual: (1, w.len()),
        });
    }
    let n = y.len();
    let quarter = (n / 4) as f64;
    Ok(relu_correlation(&convolve_1d(&y.samples, &w.samples), |k| {
        time(k, n).abs() < quarter
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    /// Must be below the threshold.
    Equality,
    /// Must exceed the threshold.
    Separation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrPair {
    pub signal: SignalKind,
    pub parity: Parity,
    pub positive: Corr2x2,
    pub negative: Corr2x2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub sigma: f64,
    pub xi: f64,
    pub n: usize,
    pub matrices: Vec<CorrPair>,
    pub checks: Vec<TheoremCheck>,
    pub passed: bool,
}

impl Theorem1Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per matrix entry: signal, parity, sign of y, γ, γ′, value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("signal,parity,y_sign,gamma,gamma_prime,value\n");
        for m in &self.matrices {
            for (label, c) in [("+", &m.positive), ("-", &m.negative)] {
                for (a, ga) in [1, -1].into_iter().enumerate() {
                    for (b, gb) in [1, -1].into_iter().enumerate() {
                        out.push_str(&format!(
                            "{:?},{:?},{},{},{},{:e}\n",
                            m.signal, m.parity, label, ga, gb, c.values[a][b]
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Correlation matrices of `±y` for Dirac and step inputs against both
/// wavelets, with the two exact equalities (odd/Dirac, even/step) and the
/// two separations (even/Dirac, odd/step).
pub fn theorem1_report(sigma: f64, xi: f64, n: usize) -> Result<Theorem1Report> {
    let even = wavelet_1d(Parity::Even, sigma, xi, n)?;
    let odd = wavelet_1d(Parity::Odd, sigma, xi, n)?;
    let dirac = Signal1D::dirac(n)?;
    let step = Signal1D::step(n)?;

    let mut matrices = Vec::new();
    let mut checks = Vec::new();
    for (signal, central) in [(&dirac, false), (&step, true)] {
        for (w, parity) in [(&even, Parity::Even), (&odd, Parity::Odd)] {
            let corr = |y: &Signal1D| {
                if central {
                    corr_matrix_1d_central(y, w)
                } else {
                    corr_matrix_1d(y, w)
                }
            };
            let positive = corr(signal)?;
            let negative = corr(&signal.negated())?;
            let distance = positive.distance(&negative);
            let separates = matches!(
                (signal.description, parity),
                (SignalKind::Dirac, Parity::Even) | (SignalKind::Step, Parity::Odd)
            );
            let (kind, threshold) = if separates {
                (CheckKind::Separation, SEPARATION_REL * positive.frobenius())
            } else {
                (CheckKind::Equality, EQUALITY_TOL)
            };
            let passed = match kind {
                CheckKind::Equality => distance < threshold,
                CheckKind::Separation => distance > threshold,
            };
            let sig = match signal.description {
                SignalKind::Dirac => "dirac",
                _ => "step",
            };
            let par = match parity {
                Parity::Even => "even",
                Parity::Odd => "odd",
            };
            checks.push(TheoremCheck {
                name: format!("{sig}/{par}"),
                kind,
                value: distance,
                threshold,
                passed,
            });
            matrices.push(CorrPair {
                signal: signal.description,
                parity,
                positive,
                negative,
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(Theorem1Report {
        sigma,
        xi,
        n,
        matrices,
        checks,
        passed,
    })
}

/// `‖C(γ, γ′) − C(−γ, −γ′)‖_F` of a sequence; zero for odd sequences.
pub fn sign_flip_asymmetry(f: &[f64]) -> f64 {
    let c = relu_correlation(f, |_| true);
    c.distance(&c.sign_swapped())
}

/// Largest `|r(t) + r(−t)|` of the even wavelet's step response over
/// `|t| < n/4`; zero when the response is odd.
pub fn step_response_oddness(sigma: f64, xi: f64, n: usize) -> Result<f64> {
    let even = wavelet_1d(Parity::Even, sigma, xi, n)?;
    let r = convolve_1d(&Signal1D::step(n)?.samples, &even.samples);
    let quarter = (n / 4) as f64;
    Ok((0..n)
        .filter(|&k| time(k, n).abs() < quarter)
        .map(|k| (r[k] + r[(n - k) % n]).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationCheck {
    pub orientation: usize,
    /// Grid points where `Σ_j |ψ̂_j|² > |Σ_j ψ̂_j|² + slack`.
    pub violations: usize,
    pub max_violation: f64,
    /// Grid points where `i·ψ̂_j(ω)` does not share one sign across `j`.
    pub sign_disagreements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpFrameReport {
    pub orientations: Vec<OrientationCheck>,
    pub slack: f64,
}

impl LpFrameReport {
    pub fn violations(&self) -> usize {
        self.orientations.iter().map(|o| o.violations).sum()
    }

    pub fn sign_disagreements(&self) -> usize {
        self.orientations.iter().map(|o| o.sign_disagreements).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// Absolute slack on the pointwise inequality.
pub const LP_SLACK: f64 = 1e-12;

/// Grid scan of `Σ_j |ψ̂_{j,θ}^o|² ≤ |Σ_j ψ̂_{j,θ}^o|²` for every
/// orientation, and of the sign agreement that implies it.
pub fn lp_frame_check(bank: &FilterBank) -> LpFrameReport {
    let cfg = bank.config();
    let n = cfg.grid_size;
    let mut orientations = Vec::with_capacity(cfg.num_orientations);
    for orientation in 0..cfg.num_orientations {
        let family = Family::Directional {
            orientation,
            parity: Parity::Odd,
        };
        let spectra: Vec<_> = (0..cfg.num_scales)
            .filter_map(|scale| bank.get(&FilterKey::Wavelet { scale, family }))
            .collect();
        let peak = spectra
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, c| m.max(c.norm()));
        let floor = 1e-12 * peak;
        let mut check = OrientationCheck {
            orientation,
            violations: 0,
            max_violation: 0.0,
            sign_disagreements: 0,
        };
        for a in 0..n {
            for b in 0..n {
                let mut sum = Complex64::new(0.0, 0.0);
                let mut energy = 0.0;
                let (mut pos, mut neg) = (false, false);
                for s in &spectra {
                    let v = s[[a, b]];
                    sum += v;
                    energy += v.norm_sqr();
                    // i·ψ̂ is real for an odd real filter
                    let r = -v.im;
                    if r > floor {
                        pos = true;
                    } else if r < -floor {
                        neg = true;
                    }
                }
                let excess = energy - sum.norm_sqr();
                if excess > LP_SLACK {
                    check.violations += 1;
                    check.max_violation = check.max_violation.max(excess);
                }
                if pos && neg {
                    check.sign_disagreements += 1;
                }
            }
        }
        orientations.push(check);
    }
    LpFrameReport {
        orientations,
        slack: LP_SLACK,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelets_have_exact_parity() {
        let n = 64;
        let e = wavelet_1d(Parity::Even, 2.0, PI / 2.0, n).unwrap();
        let o = wavelet_1d(Parity::Odd, 2.0, PI / 2.0, n).unwrap();
        assert_eq!(e.reflected(), e.samples);
        let neg: Vec<f64> = o.samples.iter().map(|v| -v).collect();
        assert_eq!(o.reflected(), neg);
        assert!(e.samples.iter().sum::<f64>().abs() < 1e-8);
    }

    #[test]
    fn zero_signal_has_zero_correlation() {
        let w = wavelet_1d(Parity::Even, 2.0, 1.0, 32).unwrap();
        let y = Signal1D::custom(vec![0.0; 32]).unwrap();
        assert_eq!(corr_matrix_1d(&y, &w).unwrap().frobenius(), 0.0);
    }

    #[test]
    fn short_signals_rejected() {
        assert!(Signal1D::dirac(8).is_err());
        assert!(wavelet_1d(Parity::Odd, 1.0, 4.0, 32).is_err());
    }

    #[test]
    fn swapped_matrix_reverses_both_signs() {
        let c = Corr2x2 {
            values: [[1.0, 2.0], [3.0, 4.0]],
        };
        let s = c.sign_swapped();
        assert_eq!(s.get(1.0, 1.0), 4.0);
        assert_eq!(s.get(1.0, -1.0), 3.0);
        assert_eq!(s.get(-1.0, 1.0), 2.0);
    }
}
