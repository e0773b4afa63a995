//! Statistic-matching adjustments: pixel moments, single-map variance and
//! joint Gram matching of a family of maps.

use ndarray::{Array1, Array2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::Image;
use crate::statistics::{self, GramMatrix, PixelStats, FLAT_VARIANCE};
use crate::transform::ReluKey;

/// Variance below which a map is treated as constant.
pub const CONSTANT_VARIANCE: f64 = 1e-14;

/// Relative eigenvalue shift used when taking Gram square roots.
pub const GRAM_SHIFT: f64 = 1e-10;

const MOMENT_TOL: f64 = 1e-10;
const MOMENT_STEPS: usize = 60;
const CLAMP_ROUNDS: usize = 8;

/// Outcome of [`match_pixel_stats`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PixelReport {
    /// `|Δskew| + |Δkurt|` after each accepted internal step, one list per
    /// clamp round (the first entry is the value before any step).
    pub residual_history: Vec<Vec<f64>>,
    pub skewness_error: f64,
    pub kurtosis_error: f64,
    /// Largest excursion outside `[min, max]` left by the final re-fit.
    pub range_excess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum VarianceOutcome {
    Matched { factor: f64 },
    /// The map is constant and the target variance is positive.
    Skipped { current: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GramReport {
    /// Frobenius distance to the target before and after the adjustment.
    pub residual_before: f64,
    pub residual_after: f64,
    /// Smallest eigenvalue of the Gram matrix before the adjustment.
    pub min_eigenvalue: f64,
}

/// Per-iteration record of every adjustment, in application order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AdjustmentReport {
    pub pixel: Option<PixelReport>,
    pub variance: Vec<(String, VarianceOutcome)>,
    pub gram: Vec<(String, GramReport)>,
}

fn standardize(x: &Image) -> (Image, f64, f64) {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (x.mapv(|v| (v - mean) / sd), mean, var)
}

/// Skewness and kurtosis of `z + λ·d`.
fn shape_along(z: &Image, d: &Image, lambda: f64) -> (f64, f64) {
    let n = z.len() as f64;
    let mean = z.iter().zip(d.iter()).map(|(a, b)| a + lambda * b).sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (a, b) in z.iter().zip(d.iter()) {
        let t = a + lambda * b - mean;
        let t2 = t * t;
        m2 += t2;
        m3 += t2 * t;
        m4 += t2 * t2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    (m3 / m2.powf(1.5), m4 / (m2 * m2))
}

/// Pixel-space ascent directions for skewness and kurtosis of a
/// standardized map, both orthogonal to the constant and linear directions.
fn directions(z: &Image) -> (Image, Image) {
    let n = z.len() as f64;
    let s = z.iter().map(|v| v * v * v).sum::<f64>() / n;
    let k = z.iter().map(|v| v * v * v * v).sum::<f64>() / n;
    (z.mapv(|v| v * v - 1.0 - s * v), z.mapv(|v| v * v * v - s - k * v))
}

fn shape_residual(z: &Image, target: &PixelStats) -> f64 {
    let (s, k) = shape_along(z, z, 0.0);
    (s - target.skewness).abs() + (k - target.kurtosis).abs()
}

/// Re-fit applied after every trial move, e.g. standardization.
type Realize<'a> = &'a dyn Fn(&Image) -> Option<Image>;

/// Moves skewness and kurtosis toward the target with damped Newton steps
/// in the plane of the two moment directions; pixels listed in `frozen`
/// do not move. The Newton step is a descent direction for
/// `|Δskew| + |Δkurt|`, so every accepted step lowers it. Returns the
/// residual after each accepted step.
fn match_shape(z: &mut Image, target: &PixelStats, realize: Realize<'_>, frozen: &[usize]) -> Vec<f64> {
    let mut residual = shape_residual(z, target);
    let mut history = vec![residual];
    let moved = |base: &Image, d: &Image, t: f64| realize(&(base + &(d * t)));
    for _ in 0..MOMENT_STEPS {
        if residual < MOMENT_TOL {
            break;
        }
        let (mut ds, mut dk) = directions(&standardize(z).0);
        for &i in frozen {
            ds.as_slice_mut().expect("standard layout")[i] = 0.0;
            dk.as_slice_mut().expect("standard layout")[i] = 0.0;
        }
        let (s0, k0) = shape_along(z, z, 0.0);
        let (rs, rk) = (target.skewness - s0, target.kurtosis - k0);
        let h = 1e-6;
        let partial = |d: &Image| {
            let (p, m) = (moved(z, d, h)?, moved(z, d, -h)?);
            let ((sp, kp), (sm, km)) = (shape_along(&p, &p, 0.0), shape_along(&m, &m, 0.0));
            Some(((sp - sm) / (2.0 * h), (kp - km) / (2.0 * h)))
        };
        let (Some((a11, a21)), Some((a12, a22))) = (partial(&ds), partial(&dk)) else {
            break;
        };
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let (ps, pk) = ((a22 * rs - a12 * rk) / det, (a11 * rk - a21 * rs) / det);
        let step = &ds * ps + &dk * pk;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            if let Some(candidate) = moved(z, &step, t) {
                let r = shape_residual(&candidate, target);
                if r.is_finite() && r < residual {
                    accepted = Some((candidate, r));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((candidate, r)) => {
                *z = candidate;
                residual = r;
                history.push(r);
            }
            None => break,
        }
    }
    history
}

/// Affine re-fit of every pixel except `pinned` so that the whole image has
/// the target mean and variance; `None` when the pinned values leave no
/// room for it.
fn refit_free(y: &Image, pinned: &[usize], target: &PixelStats) -> Option<Image> {
    let n = y.len() as f64;
    let nf = n - pinned.len() as f64;
    let values = y.as_slice()?;
    let (p1, p2) = pinned.iter().fold((0.0, 0.0), |(a, b), &i| (a + values[i], b + values[i] * values[i]));
    let (sum, sq) = y.iter().fold((0.0, 0.0), |(a, b), &v| (a + v, b + v * v));
    let (f1, f2) = (sum - p1, sq - p2);
    let (mu, nu) = (f1 / nf, f2 / nf - (f1 / nf).powi(2));
    let want_mean = (n * target.mean - p1) / nf;
    let want_var = (n * (target.variance + target.mean * target.mean) - p2) / nf - want_mean * want_mean;
    if !(nu > 0.0 && want_var > 0.0) {
        return None;
    }
    let scale = (want_var / nu).sqrt();
    let mut out = y.mapv(|v| want_mean + scale * (v - mu));
    let slice = out.as_slice_mut()?;
    for &i in pinned {
        slice[i] = values[i];
    }
    Some(out)
}

/// Sets the smallest and largest pixels to the target range ends, then
/// restores the moments by moving the other pixels. Clamping alone can only
/// narrow the range, so without this step the extremes drift inward over
/// repeated projections. Returns `None`, leaving `x` as it is, when the
/// moments cannot be restored inside the range.
fn pin_extremes(x: &Image, target: &PixelStats, history: &mut Vec<Vec<f64>>) -> Option<Image> {
    let values = x.as_slice()?;
    let arg = |better: fn(f64, f64) -> bool| {
        (0..values.len()).fold(0, |b, i| if better(values[i], values[b]) { i } else { b })
    };
    let (lo, hi) = (arg(|a, b| a < b), arg(|a, b| a > b));
    let span = target.max - target.min;
    let tol = 1e-12 * span;
    if lo == hi || ((values[lo] - target.min).abs() <= tol && (values[hi] - target.max).abs() <= tol) {
        return None;
    }
    let pinned = [lo, hi];
    let mut y = x.clone();
    {
        let s = y.as_slice_mut()?;
        s[lo] = target.min;
        s[hi] = target.max;
    }
    let realize = |v: &Image| refit_free(v, &pinned, target);
    let mut y = realize(&y)?;
    let mut rounds = Vec::new();
    for _ in 0..CLAMP_ROUNDS {
        rounds.push(match_shape(&mut y, target, &realize, &pinned));
        if y.iter().all(|&v| v >= target.min - tol && v <= target.max + tol) {
            break;
        }
        y.mapv_inplace(|v| v.clamp(target.min, target.max));
        y = realize(&y)?;
    }
    let s = statistics::pixel_stats(&y);
    let ok = (s.mean - target.mean).abs() <= 1e-12 * target.mean.abs().max(span)
        && (s.variance - target.variance).abs() <= 1e-11 * target.variance
        && shape_residual(&y, target) < 1e-6
        && s.min >= target.min - tol
        && s.max <= target.max + tol;
    if !ok {
        return None;
    }
    history.extend(rounds);
    Some(y)
}

fn affine(z: &Image, target: &PixelStats) -> Image {
    let sd = target.variance.sqrt();
    z.mapv(|v| target.mean + sd * v)
}

/// Matches mean and variance exactly and skewness/kurtosis approximately,
/// restricts values to `[min, max]` with an affine re-fit, then pins the
/// extreme pixels to `min` and `max` when the moments allow it.
pub fn match_pixel_stats(x: &Image, target: &PixelStats) -> Result<(Image, PixelReport)> {
    if !(target.variance >= 0.0) || target.max < target.min {
        return Err(Error::InfeasibleTarget(format!(
            "variance {} over range [{}, {}]",
            target.variance, target.min, target.max
        )));
    }
    let span = target.max - target.min;
    if target.variance > FLAT_VARIANCE && target.variance > 0.25 * span * span * (1.0 + 1e-9) {
        return Err(Error::InfeasibleTarget(format!(
            "variance {} exceeds what the range [{}, {}] allows",
            target.variance, target.min, target.max
        )));
    }
    if target.variance < FLAT_VARIANCE {
        return Ok((Image::from_elem(x.dim(), target.mean), PixelReport::default()));
    }
    let (mut z, _, var) = standardize(x);
    if var < CONSTANT_VARIANCE {
        return Ok((x.mapv(|v| v - x.mean().unwrap_or(0.0) + target.mean), PixelReport::default()));
    }

    let mut report = PixelReport::default();
    let standard = |y: &Image| Some(standardize(y).0);
    let mut out = affine(&z, target);
    for _ in 0..CLAMP_ROUNDS {
        report.residual_history.push(match_shape(&mut z, target, &standard, &[]));
        out = affine(&z, target);
        let outside = out.iter().any(|&v| v < target.min || v > target.max);
        if !outside {
            break;
        }
        out.mapv_inplace(|v| v.clamp(target.min, target.max));
        z = standardize(&out).0;
        out = affine(&z, target);
    }
    if let Some(pinned) = pin_extremes(&out, target, &mut report.residual_history) {
        out = pinned;
    }

    let s = statistics::pixel_stats(&out);
    report.skewness_error = (s.skewness - target.skewness).abs();
    report.kurtosis_error = (s.kurtosis - target.kurtosis).abs();
    report.range_excess = (target.min - s.min).max(s.max - target.max).max(0.0);
    Ok((out, report))
}

/// Scales a map so its population variance equals `target_var`. With
/// `preserve_mean` only the deviations about the mean are scaled; otherwise
/// the whole map is multiplied by the same factor.
pub fn match_variance(map: &mut Image, target_var: f64, preserve_mean: bool) -> VarianceOutcome {
    let current = statistics::variance(map);
    if current < CONSTANT_VARIANCE {
        if target_var > 0.0 {
            return VarianceOutcome::Skipped { current };
        }
        return VarianceOutcome::Matched { factor: 1.0 };
    }
    let factor = (target_var.max(0.0) / current).sqrt();
    if preserve_mean {
        let mean = map.mean().unwrap_or(0.0);
        map.mapv_inplace(|v| mean + factor * (v - mean));
    } else {
        map.mapv_inplace(|v| factor * v);
    }
    VarianceOutcome::Matched { factor }
}

/// Symmetric linear map `M` with `MᵀCM = T` for full-rank `C`:
/// `M = C^{-1/2}(C^{1/2}TC^{1/2})^{1/2}C^{-1/2}`, evaluated in the
/// eigenbasis of `C` after shifting both matrices by `GRAM_SHIFT·trace/K`.
pub fn gram_transform(current: &Array2<f64>, target: &Array2<f64>) -> Array2<f64> {
    gram_transform_with_spectrum(current, target).0
}

/// [`gram_transform`] plus the smallest eigenvalue of `current`.
fn gram_transform_with_spectrum(current: &Array2<f64>, target: &Array2<f64>) -> (Array2<f64>, f64) {
    let k = current.nrows();
    let eps = |a: &Array2<f64>| GRAM_SHIFT * linalg::trace(a) / k as f64;
    let shift = |a: &Array2<f64>| a + &(Array2::<f64>::eye(k) * eps(a));
    let (lambda, u) = linalg::sym_eigen(&shift(current));
    let min_eigenvalue = lambda[0] - eps(current);
    let lambda = lambda.mapv(|v| v.max(f64::MIN_POSITIVE));
    let root: Array1<f64> = lambda.mapv(f64::sqrt);
    let ut = u.t().to_owned();
    let t_rot = linalg::matmul(&linalg::matmul(&ut, &shift(target)), &u);
    // Λ^{1/2} T' Λ^{1/2}
    let mut b = t_rot;
    for ((i, j), v) in b.indexed_iter_mut() {
        *v *= root[i] * root[j];
    }
    let (sigma, v) = linalg::sym_eigen(&b);
    let mut inner = linalg::spectral_fn(&sigma, &v, |s| s.max(0.0).sqrt());
    for ((i, j), val) in inner.indexed_iter_mut() {
        *val /= root[i] * root[j];
    }
    let m = linalg::matmul(&linalg::matmul(&u, &inner), &ut);
    ((&m + &m.t()) * 0.5, min_eigenvalue)
}

/// Applies the symmetric Gram transform jointly to `maps`, whose keys must
/// equal the target index in order. Structural-zero pairs are matched to
/// the zeros stored in the target. Maps are left untouched when the
/// transform would not lower the residual.
pub fn match_gram(maps: &mut [&mut Image], index: &[ReluKey], target: &GramMatrix) -> Result<GramReport> {
    if index != target.index.as_slice() || maps.len() != index.len() {
        return Err(Error::IndexMismatch(format!(
            "{} maps / {} keys against a Gram index of {}",
            maps.len(),
            index.len(),
            target.len()
        )));
    }
    let k = index.len();
    if k == 0 {
        return Ok(GramReport {
            residual_before: 0.0,
            residual_after: 0.0,
            min_eigenvalue: 0.0,
        });
    }
    let t = &target.values;
    let tol = 1e-10 * (linalg::trace(t) / k as f64).max(f64::MIN_POSITIVE);
    let t_min = linalg::min_eigenvalue(t);
    if t_min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: t_min });
    }

    let y = {
        let views: Vec<&Image> = maps.iter().map(|m| &**m).collect();
        linalg::stack_columns(&views)
    };
    let p = y.nrows() as f64;
    let c = linalg::gram(&y, p);
    let residual_before = linalg::frobenius(&(&c - t));
    if linalg::trace(&c) <= 0.0 {
        return Ok(GramReport {
            residual_before,
            residual_after: residual_before,
            min_eigenvalue: 0.0,
        });
    }

    let (m, min_eigenvalue) = gram_transform_with_spectrum(&c, t);
    let out = linalg::matmul(&y, &m);
    let residual_after = linalg::frobenius(&(&linalg::gram(&out, p) - t));
    // on an ill-conditioned family rounding in the transform can exceed an
    // already small residual
    if !(residual_after < residual_before) {
        return Ok(GramReport {
            residual_before,
            residual_after: residual_before,
            min_eigenvalue,
        });
    }
    for (map, col) in maps.iter_mut().zip(out.axis_iter(Axis(1))) {
        for (dst, &src) in map.iter_mut().zip(col.iter()) {
            *dst = src;
        }
    }
    Ok(GramReport {
        residual_before,
        residual_after,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::FilterKey;
    use crate::transform::Sign;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn keys(k: usize) -> Vec<ReluKey> {
        (0..k)
            .map(|i| ReluKey {
                parent: None,
                filter: FilterKey::Wavelet {
                    scale: i,
                    family: crate::filterbank::Family::Omni { angular: 0 },
                },
                sign: Sign::Plus,
            })
            .collect()
    }

    #[test]
    fn variance_is_halved_about_the_mean() {
        let mut m = Image::from_shape_fn((2, 2), |(i, j)| [1.0, 5.0, 1.0, 5.0][2 * i + j]);
        assert_eq!(statistics::variance(&m), 4.0);
        match_variance(&mut m, 1.0, true);
        assert_eq!(m.iter().copied().collect::<Vec<_>>(), vec![2.0, 4.0, 2.0, 4.0]);
    }

    #[test]
    fn constant_map_variance_is_skipped() {
        let mut m = Image::from_elem((4, 4), 2.0);
        assert!(matches!(match_variance(&mut m, 1.0, false), VarianceOutcome::Skipped { .. }));
    }

    #[test]
    fn gram_transform_of_equal_matrices_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Array2::from_shape_fn((50, 6), |_| rng.gen::<f64>());
        let c = a.t().dot(&a);
        let m = gram_transform(&c, &c);
        assert!(linalg::frobenius(&(&m - &Array2::<f64>::eye(6))) < 1e-10);
    }

    #[test]
    fn target_that_is_not_psd_is_rejected() {
        let mut a = Image::from_elem((2, 2), 1.0);
        let mut b = Image::from_elem((2, 2), 2.0);
        let target = GramMatrix {
            index: keys(2),
            values: ndarray::array![[1.0, 2.0], [2.0, 1.0]],
        };
        let err = match_gram(&mut [&mut a, &mut b], &keys(2), &target);
        assert!(matches!(err, Err(Error::NotPsd { .. })));
    }

    #[test]
    fn constant_target_gives_constant_image() {
        let x = Image::from_shape_fn((4, 4), |(i, j)| (i * j) as f64);
        let t = statistics::pixel_stats(&Image::from_elem((4, 4), 0.7));
        let (y, _) = match_pixel_stats(&x, &t).unwrap();
        assert!(y.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn degenerate_range_with_variance_is_infeasible() {
        let t = PixelStats {
            mean: 0.5,
            variance: 0.1,
            skewness: 0.0,
            kurtosis: 2.0,
            min: 0.5,
            max: 0.5,
        };
        let x = Image::from_shape_fn((4, 4), |(i, _)| i as f64);
        assert!(matches!(match_pixel_stats(&x, &t), Err(Error::InfeasibleTarget(_))));
    }
}
