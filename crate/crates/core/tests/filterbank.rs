mod common;

use rustfft::num_complex::Complex64;
use wavetex::filterbank::*;
use wavetex::spectral::{self, signed_index, Spectrum};

fn raw_bank(n: usize, j: usize, m: usize, l: usize) -> FilterBank {
    build_bank(&FilterBankConfig::new(n, j, m, l).with_tighten(false)).unwrap()
}

fn wavelet(scale: usize, orientation: usize, parity: Parity) -> FilterKey {
    FilterKey::Wavelet {
        scale,
        family: Family::Directional { orientation, parity },
    }
}

/// Bilinear lookup of a spectrum at a signed, possibly fractional frequency
/// index; zero outside the grid.
fn lookup(s: &Spectrum, k1: f64, k2: f64) -> Complex64 {
    let n = s.nrows() as i64;
    let half = n / 2;
    let at = |a: i64, b: i64| {
        if a < -half || a >= half || b < -half || b >= half {
            Complex64::new(0.0, 0.0)
        } else {
            s[[a.rem_euclid(n) as usize, b.rem_euclid(n) as usize]]
        }
    };
    let (a0, b0) = (k1.floor(), k2.floor());
    let (fa, fb) = (k1 - a0, k2 - b0);
    let (a0, b0) = (a0 as i64, b0 as i64);
    at(a0, b0) * (1.0 - fa) * (1.0 - fb)
        + at(a0 + 1, b0) * fa * (1.0 - fb)
        + at(a0, b0 + 1) * (1.0 - fa) * fb
        + at(a0 + 1, b0 + 1) * fa * fb
}

fn l2(s: &Spectrum) -> f64 {
    s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn quarter_turn_is_exact_on_the_grid() {
    let n = 64;
    let bank = raw_bank(n, 2, 4, 0);
    for parity in [Parity::Even, Parity::Odd] {
        let base = bank.get(&wavelet(0, 0, parity)).unwrap();
        let turned = bank.get(&wavelet(0, 2, parity)).unwrap();
        let expected = Spectrum::from_shape_fn((n, n), |(a, b)| {
            let (k1, k2) = (signed_index(a, n), signed_index(b, n));
            lookup(base, k2 as f64, -k1 as f64)
        });
        let err = l2(&(turned - &expected)) / l2(turned);
        assert!(err < 1e-6, "{parity:?}: {err:e}");
    }
}

// Scale 0 is left out: its passband reaches the Nyquist band along the axes
// and is clipped there, while the rotated copy is not.
#[test]
fn oblique_orientation_matches_rotated_base_filter() {
    let n = 256;
    let bank = raw_bank(n, 3, 4, 0);
    let theta = std::f64::consts::FRAC_PI_4;
    let (c, s) = (theta.cos(), theta.sin());
    for scale in 1..3 {
        for parity in [Parity::Even, Parity::Odd] {
            let base = bank.get(&wavelet(scale, 0, parity)).unwrap();
            let rotated = bank.get(&wavelet(scale, 1, parity)).unwrap();
            let expected = Spectrum::from_shape_fn((n, n), |(a, b)| {
                let (k1, k2) = (signed_index(a, n) as f64, signed_index(b, n) as f64);
                lookup(base, c * k1 + s * k2, -s * k1 + c * k2)
            });
            let err = l2(&(rotated - &expected)) / l2(rotated);
            assert!(err < 1e-2, "scale {scale} {parity:?}: {err:e}");
        }
    }
}

#[test]
fn dyadic_dilation_holds_where_the_dilated_frequency_is_on_grid() {
    let n = 64;
    let bank = raw_bank(n, 3, 4, 0);
    let half = (n / 2) as i64;
    let mut checked = 0;
    for m in 0..4 {
        for parity in [Parity::Even, Parity::Odd] {
            let base = bank.get(&wavelet(0, m, parity)).unwrap();
            for j in 1..3 {
                let dilated = bank.get(&wavelet(j, m, parity)).unwrap();
                let f = 1i64 << j;
                for a in 0..n {
                    for b in 0..n {
                        let (k1, k2) = (f * signed_index(a, n), f * signed_index(b, n));
                        if k1.abs() >= half || k2.abs() >= half {
                            continue;
                        }
                        let want = base[[k1.rem_euclid(n as i64) as usize, k2.rem_euclid(n as i64) as usize]];
                        assert!((dilated[[a, b]] - want).norm() < 1e-12);
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn every_filter_is_real_in_space() {
    let bank = build_bank(&FilterBankConfig::new(32, 3, 4, 4)).unwrap();
    for f in bank.filters() {
        let spatial = bank.fft().inverse(&f.spectrum);
        let re = spatial.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let im = spatial.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        assert!(im <= 1e-10 * re, "{}: {im:e} vs {re:e}", f.key);
    }
}

#[test]
fn summed_odd_wavelets_obey_the_scale_sum_inequality() {
    let n = 256;
    let bank = build_bank(&FilterBankConfig::new(n, 5, 4, 4)).unwrap();
    for m in 0..4 {
        for a in 0..n {
            for b in 0..n {
                let mut sum = Complex64::new(0.0, 0.0);
                let mut energy = 0.0;
                for j in 0..5 {
                    let v = bank.get(&wavelet(j, m, Parity::Odd)).unwrap()[[a, b]];
                    sum += v;
                    energy += v.norm_sqr();
                }
                assert!(energy <= sum.norm_sqr() + 1e-12, "m {m} at ({a}, {b})");
            }
        }
    }
}

#[test]
fn summed_bank_lower_bound_does_not_drop_without_omni_filters() {
    let bank = build_bank(&FilterBankConfig::new(128, 5, 4, 0)).unwrap();
    let summed = summed_bank(&bank).unwrap();
    assert!(summed.frame_bounds().lower >= bank.frame_bounds().lower - 1e-9);
    assert!(dual_bank(&summed).is_ok());
}

#[test]
fn summed_bank_of_the_default_configuration_is_a_frame() {
    let bank = build_bank(&FilterBankConfig::new(128, 5, 4, 4)).unwrap();
    let summed = summed_bank(&bank).unwrap();
    assert!(summed.frame_bounds().lower > FRAME_THRESHOLD);
    let duals = dual_bank(&summed).unwrap();
    assert!(partition_residual(&summed, &duals).unwrap() < 1e-8);
}

#[test]
fn omni_radial_frequency_decreases_with_angular_index() {
    let cfg = FilterBankConfig::new(64, 3, 4, 4);
    let nu: Vec<f64> = (0..4).map(|l| cfg.omni_radial_freq(l)).collect();
    assert!(nu.windows(2).all(|w| w[0] > w[1]), "{nu:?}");
}

#[test]
fn omni_filters_are_zero_mean_and_real() {
    let bank = raw_bank(64, 3, 4, 4);
    for f in bank.filters() {
        if let FilterKey::Wavelet {
            family: Family::Omni { .. },
            ..
        } = f.key
        {
            assert!(f.spectrum[[0, 0]].norm() < 1e-10);
            assert!(spectral::imaginary_ratio(bank.fft(), &f.spectrum) < 1e-10);
        }
    }
}
