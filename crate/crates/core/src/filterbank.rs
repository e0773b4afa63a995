//! Multiscale filter family on a discrete frequency grid: low pass, high
//! pass, even/odd directional wavelets and omnidirectional wavelets, plus
//! frame bounds, dual filters and the scale-summed bank used to invert the
//! second layer.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, GridFrequency, Result};
use crate::spectral::{self, frequency, signed_index, Fft2, Image, Spectrum};

/// Lower frame bound below which a bank is considered deficient.
pub const FRAME_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn tag(self) -> char {
        match self {
            Parity::Even => 'e',
            Parity::Odd => 'o',
        }
    }
}

/// Wavelet family `(α, β)`: a directional orientation with parity, or an
/// omnidirectional angular frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Directional { orientation: usize, parity: Parity },
    Omni { angular: usize },
}

impl Family {
    pub fn is_directional(&self) -> bool {
        matches!(self, Family::Directional { .. })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Directional { orientation, parity } => write!(f, "{}_m{}", parity.tag(), orientation),
            Family::Omni { angular } => write!(f, "p_l{}", angular),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::IndexMismatch(format!("unparseable family `{s}`"));
        let (tag, idx) = s.split_once('_').ok_or_else(bad)?;
        match tag {
            "e" | "o" => {
                let orientation = idx.strip_prefix('m').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
                let parity = if tag == "e" { Parity::Even } else { Parity::Odd };
                Ok(Family::Directional { orientation, parity })
            }
            "p" => {
                let angular = idx.strip_prefix('l').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
                Ok(Family::Omni { angular })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Identifies one filter of a bank.
///
/// String form (used in manifests and JSON profiles): `lowpass`, `highpass`,
/// `residual`, `psi_<family>_j<scale>` for wavelets (e.g. `psi_o_j2_m1`,
/// `psi_p_j0_l3`) and `sum_<family>` for scale-summed wavelets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKey {
    LowPass,
    HighPass,
    Wavelet { scale: usize, family: Family },
    Summed(Family),
    Residual,
}

impl FilterKey {
    pub fn is_wavelet(&self) -> bool {
        matches!(self, FilterKey::Wavelet { .. } | FilterKey::Summed(_))
    }
}

impl fmt::Display for FilterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterKey::LowPass => f.write_str("lowpass"),
            FilterKey::HighPass => f.write_str("highpass"),
            FilterKey::Residual => f.write_str("residual"),
            FilterKey::Summed(family) => write!(f, "sum_{family}"),
            FilterKey::Wavelet { scale, family } => match family {
                Family::Directional { orientation, parity } => {
                    write!(f, "psi_{}_j{}_m{}", parity.tag(), scale, orientation)
                }
                Family::Omni { angular } => write!(f, "psi_p_j{}_l{}", scale, angular),
            },
        }
    }
}

impl FromStr for FilterKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::IndexMismatch(format!("unparseable filter key `{s}`"));
        match s {
            "lowpass" => return Ok(FilterKey::LowPass),
            "highpass" => return Ok(FilterKey::HighPass),
            "residual" => return Ok(FilterKey::Residual),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("sum_") {
            return Ok(FilterKey::Summed(rest.parse()?));
        }
        let rest = s.strip_prefix("psi_").ok_or_else(bad)?;
        let mut parts = rest.split('_');
        let tag = parts.next().ok_or_else(bad)?;
        let scale = parts
            .next()
            .and_then(|p| p.strip_prefix('j'))
            .and_then(|v| v.parse().ok())
            .ok_or_else(bad)?;
        let idx = parts.next().ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let family = format!("{tag}_{idx}").parse()?;
        Ok(FilterKey::Wavelet { scale, family })
    }
}

impl Serialize for FilterKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FilterKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterBankConfig {
    /// Image side N (power of two).
    pub grid_size: usize,
    /// Number of dyadic scales J.
    pub num_scales: usize,
    /// Directional orientations M (angles mπ/M).
    pub num_orientations: usize,
    /// Omnidirectional angular frequencies L (0 disables them).
    pub num_angular: usize,
    /// Gaussian window std-dev in pixels at scale 0.
    pub window_sigma: f64,
    /// |ξ| in radians/pixel.
    pub central_freq: f64,
    /// Gaussian low-pass std-dev in pixels before dilation by 2^J.
    pub lowpass_sigma: f64,
    /// Normalize to a tight frame (A = B = 1).
    pub tighten: bool,
}

impl Default for FilterBankConfig {
    fn default() -> Self {
        Self {
            grid_size: 256,
            num_scales: 5,
            num_orientations: 4,
            num_angular: 4,
            window_sigma: 0.8 * 2.0,
            central_freq: 3.0 * PI / 4.0,
            lowpass_sigma: 1.0,
            tighten: true,
        }
    }
}

impl FilterBankConfig {
    pub fn new(grid_size: usize, num_scales: usize, num_orientations: usize, num_angular: usize) -> Self {
        Self {
            grid_size,
            num_scales,
            num_orientations,
            num_angular,
            ..Self::default()
        }
    }

    pub fn with_tighten(mut self, tighten: bool) -> Self {
        self.tighten = tighten;
        self
    }

    /// Largest admissible J for this grid: log2(N) − 2.
    pub fn max_scales(&self) -> usize {
        (self.grid_size.trailing_zeros() as usize).saturating_sub(2)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid_size;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidConfig(format!("grid size {n} must be a power of two ≥ 8")));
        }
        if self.num_scales == 0 || self.num_scales > self.max_scales() {
            return Err(Error::InvalidConfig(format!(
                "num_scales {} must lie in 1..={} for N = {n}",
                self.num_scales,
                self.max_scales()
            )));
        }
        if self.num_orientations == 0 {
            return Err(Error::InvalidConfig("num_orientations must be ≥ 1".into()));
        }
        if !(self.central_freq > 0.0 && self.central_freq < PI) {
            return Err(Error::InvalidConfig(format!("central frequency {} outside (0, π)", self.central_freq)));
        }
        if !(self.lowpass_sigma > 0.0) {
            return Err(Error::InvalidConfig("lowpass_sigma must be positive".into()));
        }
        if !(self.window_sigma >= 0.5) {
            return Err(Error::DegenerateWindow(format!(
                "window sigma {} is below half a pixel",
                self.window_sigma
            )));
        }
        let widest = self.window_sigma * (1u64 << (self.num_scales - 1)) as f64;
        if widest > n as f64 / 4.0 {
            return Err(Error::DegenerateWindow(format!(
                "dilated window sigma {widest} exceeds a quarter of the grid ({n})"
            )));
        }
        Ok(())
    }

    /// Wavelet families in canonical order: per orientation even then odd,
    /// then omnidirectional angular frequencies.
    pub fn families(&self) -> Vec<Family> {
        let mut out = Vec::with_capacity(2 * self.num_orientations + self.num_angular);
        for orientation in 0..self.num_orientations {
            for parity in [Parity::Even, Parity::Odd] {
                out.push(Family::Directional { orientation, parity });
            }
        }
        for angular in 0..self.num_angular {
            out.push(Family::Omni { angular });
        }
        out
    }

    /// Radial oscillation frequency (radians/pixel, scale 0) of the ℓ-th
    /// omnidirectional wavelet, proportional to L − 1 − ℓ.
    pub fn omni_radial_freq(&self, angular: usize) -> f64 {
        let l = self.num_angular;
        if l <= 1 {
            self.central_freq
        } else {
            self.central_freq * (l - 1 - angular) as f64 / (l - 1) as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct Filter {
    pub key: FilterKey,
    pub spectrum: Spectrum,
}

/// Immutable filter family sampled on an N×N frequency grid.
#[derive(Clone, Debug)]
pub struct FilterBank {
    config: FilterBankConfig,
    filters: Vec<Filter>,
    index: BTreeMap<FilterKey, usize>,
    bounds: FrameBounds,
    fft: Fft2,
}

impl FilterBank {
    /// Assembles a bank from explicit spectra; frame bounds are computed but
    /// not checked.
    pub fn from_filters(config: FilterBankConfig, filters: Vec<Filter>) -> Result<Self> {
        let n = config.grid_size;
        let mut index = BTreeMap::new();
        for (i, f) in filters.iter().enumerate() {
            if f.spectrum.dim() != (n, n) {
                return Err(Error::ShapeMismatch {
                    expected: (n, n),
                    actual: f.spectrum.dim(),
                });
            }
            if index.insert(f.key, i).is_some() {
                return Err(Error::IndexMismatch(format!("duplicate filter key {}", f.key)));
            }
        }
        let mut bank = Self {
            config,
            filters,
            index,
            bounds: FrameBounds { lower: 0.0, upper: 0.0 },
            fft: Fft2::new(n),
        };
        bank.bounds = frame_bounds(&bank);
        Ok(bank)
    }

    pub fn config(&self) -> &FilterBankConfig {
        &self.config
    }

    pub fn grid_size(&self) -> usize {
        self.config.grid_size
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = FilterKey> + '_ {
        self.filters.iter().map(|f| f.key)
    }

    pub fn wavelet_keys(&self) -> impl Iterator<Item = FilterKey> + '_ {
        self.keys().filter(FilterKey::is_wavelet)
    }

    pub fn contains(&self, key: &FilterKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &FilterKey) -> Option<&Spectrum> {
        self.index.get(key).map(|&i| &self.filters[i].spectrum)
    }

    pub fn frame_bounds(&self) -> FrameBounds {
        self.bounds
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// `Σ_k |f̂_k(ω)|²` on the grid.
    pub fn spectral_sum(&self) -> Image {
        spectral_sum(self.filters.iter().map(|f| &f.spectrum), self.grid_size())
    }

    /// Real spatial filter with its origin at index (0, 0).
    pub fn spatial(&self, key: &FilterKey) -> Option<Image> {
        self.get(key).map(|s| self.fft.inverse_real(s))
    }

    /// A copy of this bank without the filters rejected by `keep`.
    pub fn retain<F: Fn(&FilterKey) -> bool>(&self, keep: F) -> Result<Self> {
        let filters = self.filters.iter().filter(|f| keep(&f.key)).cloned().collect();
        Self::from_filters(self.config.clone(), filters)
    }
}

fn spectral_sum<'a>(spectra: impl Iterator<Item = &'a Spectrum>, n: usize) -> Image {
    let mut sum = Image::zeros((n, n));
    for s in spectra {
        Zip::from(&mut sum).and(s).for_each(|acc, c| *acc += c.norm_sqr());
    }
    sum
}

fn uncovered(sum: &Image, threshold: f64) -> Vec<GridFrequency> {
    let n = sum.nrows();
    sum.indexed_iter()
        .filter(|(_, &v)| v < threshold)
        .map(|((a, b), _)| (signed_index(a, n), signed_index(b, n)))
        .collect()
}

/// Exhaustive min/max of `Σ_k |f̂_k(ω)|²` over every grid frequency.
pub fn frame_bounds(bank: &FilterBank) -> FrameBounds {
    let sum = bank.spectral_sum();
    let lower = sum.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = sum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    FrameBounds { lower, upper }
}

/// Frequency-domain window `ĝ(ω1, ω2)` used for directional wavelets.
pub type Window<'a> = &'a dyn Fn(f64, f64) -> f64;

/// Isotropic Gaussian window with spatial std-dev `sigma` and `ĝ(0) = 1`.
pub fn gaussian_window(sigma: f64) -> impl Fn(f64, f64) -> f64 {
    move |a, b| (-0.5 * sigma * sigma * (a * a + b * b)).exp()
}

/// Builds the full bank with the isotropic Gaussian window.
pub fn build_bank(config: &FilterBankConfig) -> Result<FilterBank> {
    let window = gaussian_window(config.window_sigma);
    build_bank_with_window(config, &window)
}

/// Builds the bank with an arbitrary directional window.
///
/// The window only shapes the directional wavelets; omnidirectional filters
/// always use a Gaussian envelope of width `window_sigma`.
pub fn build_bank_with_window(config: &FilterBankConfig, window: Window<'_>) -> Result<FilterBank> {
    config.validate()?;
    let n = config.grid_size;
    let fft = Fft2::new(n);
    let mut filters = Vec::new();

    let lp_width = config.lowpass_sigma * (1u64 << config.num_scales) as f64;
    filters.push(Filter {
        key: FilterKey::LowPass,
        spectrum: spectral::sample(n, |a, b| Complex64::new((-0.5 * lp_width * lp_width * (a * a + b * b)).exp(), 0.0)),
    });

    let omni_norms: Vec<f64> = (0..config.num_angular)
        .map(|l| {
            let base = omni_spectrum(config, &fft, 0, l);
            let peak = base.iter().fold(0.0f64, |m, c| m.max(c.norm()));
            0.5 / peak
        })
        .collect();

    for scale in 0..config.num_scales {
        for family in config.families() {
            let spectrum = match family {
                Family::Directional { orientation, parity } => {
                    directional_spectrum(config, window, scale, orientation, parity)
                }
                Family::Omni { angular } => omni_spectrum(config, &fft, scale, angular).mapv(|c| c * omni_norms[angular]),
            };
            filters.push(Filter {
                key: FilterKey::Wavelet { scale, family },
                spectrum,
            });
        }
    }
    for f in filters.iter_mut() {
        spectral::hermitian_symmetrize(&mut f.spectrum);
    }

    let partial = spectral_sum(filters.iter().map(|f| &f.spectrum), n);
    let ceiling = partial.iter().copied().fold(0.0f64, f64::max);
    let xi = config.central_freq;
    let high = Array2::from_shape_fn((n, n), |(a, b)| {
        let r = frequency(a, n).hypot(frequency(b, n));
        let ramp = ((r - xi) / (PI - xi)).clamp(0.0, 1.0);
        let ramp = (0.5 * PI * ramp).sin().powi(2);
        Complex64::new((ceiling - partial[[a, b]]).max(0.0).sqrt() * ramp, 0.0)
    });
    filters.push(Filter {
        key: FilterKey::HighPass,
        spectrum: high,
    });

    let total = spectral_sum(filters.iter().map(|f| &f.spectrum), n);
    let lower = total.iter().copied().fold(f64::INFINITY, f64::min);
    if lower < FRAME_THRESHOLD {
        return Err(Error::FrameDeficiency {
            lower,
            threshold: FRAME_THRESHOLD,
            uncovered: uncovered(&total, FRAME_THRESHOLD),
        });
    }
    if config.tighten {
        let scale = total.mapv(|v| 1.0 / v.sqrt());
        for f in filters.iter_mut() {
            Zip::from(&mut f.spectrum).and(&scale).for_each(|c, &s| *c *= s);
        }
    }
    FilterBank::from_filters(config.clone(), filters)
}

/// `ψ̂_{j,θ}^β(ω) = ψ̂^β(R_θ^{-1} 2^j ω)` with
/// `ψ̂^e = (ĝ(ω−ξ) + ĝ(ω+ξ))/2 − c·ĝ(ω)` (c cancels the DC value) and
/// `ψ̂^o = (ĝ(ω−ξ) − ĝ(ω+ξ))/(2i)`.
fn directional_spectrum(
    config: &FilterBankConfig,
    window: Window<'_>,
    scale: usize,
    orientation: usize,
    parity: Parity,
) -> Spectrum {
    let theta = orientation as f64 * PI / config.num_orientations as f64;
    let (x1, x2) = (config.central_freq * theta.cos(), config.central_freq * theta.sin());
    let dilation = (1u64 << scale) as f64;
    let g0 = window(0.0, 0.0);
    let dc = 0.5 * (window(-x1, -x2) + window(x1, x2));
    spectral::sample(config.grid_size, |a, b| {
        let (a, b) = (a * dilation, b * dilation);
        let minus = window(a - x1, b - x2);
        let plus = window(a + x1, b + x2);
        match parity {
            Parity::Even => Complex64::new(0.5 * (minus + plus) - dc * window(a, b) / g0, 0.0),
            Parity::Odd => Complex64::new(0.0, -0.5 * (minus - plus)),
        }
    })
}

/// Spectrum of `4^{-j} a(2^{-j}r) cos(ℓφ)` with
/// `a(r) = G_σ(r)·cos(ν r)` built on the periodized spatial grid and
/// mean-corrected by a matching Gaussian.
fn omni_spectrum(config: &FilterBankConfig, fft: &Fft2, scale: usize, angular: usize) -> Spectrum {
    let n = config.grid_size;
    let dilation = (1u64 << scale) as f64;
    let sigma = config.window_sigma * dilation;
    let nu = config.omni_radial_freq(angular) / dilation;
    let amp = 1.0 / (dilation * dilation);
    let tiles = ((6.0 * sigma) / n as f64).ceil() as i64;
    let mut raw = Image::zeros((n, n));
    let mut envelope = Image::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let (u1, u2) = (signed_index(a, n), signed_index(b, n));
            let (mut acc, mut env) = (0.0, 0.0);
            for p in -tiles..=tiles {
                for q in -tiles..=tiles {
                    let x = (u1 + p * n as i64) as f64;
                    let y = (u2 + q * n as i64) as f64;
                    let r = x.hypot(y);
                    let g = (-0.5 * r * r / (sigma * sigma)).exp();
                    let angle = if r == 0.0 {
                        if angular == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (angular as f64 * y.atan2(x)).cos()
                    };
                    acc += amp * g * (nu * r).cos() * angle;
                    env += g;
                }
            }
            raw[[a, b]] = acc;
            envelope[[a, b]] = env;
        }
    }
    let correction = raw.sum() / envelope.sum();
    raw.zip_mut_with(&envelope, |r, &e| *r -= correction * e);
    fft.forward(&raw)
}

/// Dual filters `conj(f̂_k)/Σ_k |f̂_k|²`.
#[derive(Clone, Debug)]
pub struct DualBank {
    duals: Vec<Filter>,
    index: BTreeMap<FilterKey, usize>,
    fft: Fft2,
}

impl DualBank {
    pub fn get(&self, key: &FilterKey) -> Option<&Spectrum> {
        self.index.get(key).map(|&i| &self.duals[i].spectrum)
    }

    pub fn filters(&self) -> &[Filter] {
        &self.duals
    }

    pub fn keys(&self) -> impl Iterator<Item = FilterKey> + '_ {
        self.duals.iter().map(|f| f.key)
    }

    pub fn contains(&self, key: &FilterKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }
}

pub fn dual_bank(bank: &FilterBank) -> Result<DualBank> {
    let sum = bank.spectral_sum();
    let lower = sum.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lower > FRAME_THRESHOLD) {
        return Err(Error::FrameDeficiency {
            lower,
            threshold: FRAME_THRESHOLD,
            uncovered: uncovered(&sum, FRAME_THRESHOLD),
        });
    }
    let duals: Vec<Filter> = bank
        .filters()
        .iter()
        .map(|f| {
            let mut s = f.spectrum.mapv(|c| c.conj());
            Zip::from(&mut s).and(&sum).for_each(|c, &d| *c /= d);
            Filter { key: f.key, spectrum: s }
        })
        .collect();
    let index = duals.iter().enumerate().map(|(i, f)| (f.key, i)).collect();
    Ok(DualBank {
        duals,
        index,
        fft: bank.fft().clone(),
    })
}

/// Largest deviation of `Σ_k f̂_k·dual_k` from 1 over the grid.
pub fn partition_residual(bank: &FilterBank, duals: &DualBank) -> Result<f64> {
    let mut total = Spectrum::zeros((bank.grid_size(), bank.grid_size()));
    for f in bank.filters() {
        let d = duals.get(&f.key).ok_or_else(|| Error::MissingKey(f.key.to_string()))?;
        Zip::from(&mut total).and(&f.spectrum).and(d).for_each(|t, a, b| *t += a * b);
    }
    Ok(total.iter().fold(0.0f64, |m, c| m.max((c - Complex64::new(1.0, 0.0)).norm())))
}

/// Replaces each wavelet family by `Σ_j ψ̂_{j,α}^β`, keeping every
/// non-wavelet filter.
pub fn summed_bank(bank: &FilterBank) -> Result<FilterBank> {
    let n = bank.grid_size();
    let mut order: Vec<Family> = Vec::new();
    let mut sums: BTreeMap<Family, Spectrum> = BTreeMap::new();
    let mut filters = Vec::new();
    for f in bank.filters() {
        match f.key {
            FilterKey::Wavelet { family, .. } => {
                let acc = sums.entry(family).or_insert_with(|| {
                    order.push(family);
                    Spectrum::zeros((n, n))
                });
                *acc += &f.spectrum;
            }
            _ => filters.push(f.clone()),
        }
    }
    for family in order {
        filters.push(Filter {
            key: FilterKey::Summed(family),
            spectrum: sums.remove(&family).expect("family present"),
        });
    }
    let summed = FilterBank::from_filters(bank.config().clone(), filters)?;
    let lower = summed.frame_bounds().lower;
    if !(lower > FRAME_THRESHOLD) {
        return Err(Error::FrameDeficiency {
            lower,
            threshold: FRAME_THRESHOLD,
            uncovered: uncovered(&summed.spectral_sum(), FRAME_THRESHOLD),
        });
    }
    Ok(summed)
}

/// Second-layer bank for directional aggregates at one orientation: the
/// low/high pass, both parities at every scale for that orientation, and a
/// residual filter `sqrt(max(0, S_full − S_reduced))` restoring the full
/// spectral coverage.
pub fn reduced_bank(bank: &FilterBank, orientation: usize) -> Result<FilterBank> {
    let n = bank.grid_size();
    let keep = |k: &FilterKey| match k {
        FilterKey::LowPass | FilterKey::HighPass => true,
        FilterKey::Wavelet {
            family: Family::Directional { orientation: o, .. },
            ..
        } => *o == orientation,
        _ => false,
    };
    let mut filters: Vec<Filter> = bank.filters().iter().filter(|f| keep(&f.key)).cloned().collect();
    let full = bank.spectral_sum();
    let reduced = spectral_sum(filters.iter().map(|f| &f.spectrum), n);
    let mut residual = Spectrum::zeros((n, n));
    Zip::from(&mut residual)
        .and(&full)
        .and(&reduced)
        .for_each(|r, &f, &s| *r = Complex64::new((f - s).max(0.0).sqrt(), 0.0));
    filters.push(Filter {
        key: FilterKey::Residual,
        spectrum: residual,
    });
    FilterBank::from_filters(bank.config().clone(), filters)
}
