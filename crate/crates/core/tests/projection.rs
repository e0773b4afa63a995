mod common;

use common::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavetex::filterbank::{Family, FilterKey, Parity};
use wavetex::linalg;
use wavetex::projection::*;
use wavetex::spectral::Image;
use wavetex::statistics::{pixel_stats, variance, GramMatrix, PixelStats};
use wavetex::transform::{ReluKey, Sign};

fn keys(k: usize) -> Vec<ReluKey> {
    (0..k)
        .map(|i| ReluKey {
            parent: None,
            filter: FilterKey::Wavelet {
                scale: i / 2,
                family: Family::Directional {
                    orientation: 0,
                    parity: Parity::Even,
                },
            },
            sign: if i % 2 == 0 { Sign::Plus } else { Sign::Minus },
        })
        .collect()
}

/// Non-negative maps with mixed correlations.
fn family(k: usize, n: usize, seed: u64) -> Vec<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<Image> = (0..k).map(|_| Image::from_shape_fn((n, n), |_| rng.gen::<f64>())).collect();
    (0..k)
        .map(|i| {
            let mix = rng.gen::<f64>();
            &base[i] + &base[(i + 1) % k].mapv(|v| mix * v)
        })
        .collect()
}

fn gram_of(maps: &[Image]) -> Array2<f64> {
    let views: Vec<&Image> = maps.iter().collect();
    let y = linalg::stack_columns(&views);
    linalg::gram(&y, y.nrows() as f64)
}

fn apply(maps: &mut [Image], index: &[ReluKey], target: &GramMatrix) -> GramReport {
    let mut refs: Vec<&mut Image> = maps.iter_mut().collect();
    match_gram(&mut refs, index, target).unwrap()
}

#[test]
fn full_rank_families_hit_the_target_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let k = rng.gen_range(2..=20);
        let index = keys(k);
        let target = GramMatrix {
            index: index.clone(),
            values: gram_of(&family(k, 32, 100 + trial)),
        };
        let mut maps = family(k, 32, trial);
        apply(&mut maps, &index, &target);
        let err = linalg::frobenius(&(gram_of(&maps) - &target.values));
        assert!(err < 1e-8, "trial {trial} K {k}: {err:e}");
    }
}

#[test]
fn two_maps_match_exactly() {
    let index = keys(2);
    let target = GramMatrix {
        index: index.clone(),
        values: ndarray::arr2(&[[2.0, 0.3], [0.3, 0.5]]),
    };
    let mut maps = family(2, 16, 3);
    let report = apply(&mut maps, &index, &target);
    assert!(linalg::frobenius(&(gram_of(&maps) - &target.values)) < 1e-8);
    assert!(report.residual_after < 1e-8 && report.residual_before > 0.1);
}

#[test]
fn matching_the_current_gram_leaves_maps_alone() {
    let index = keys(6);
    let mut maps = family(6, 16, 5);
    let before = maps.clone();
    let target = GramMatrix {
        index: index.clone(),
        values: gram_of(&maps),
    };
    apply(&mut maps, &index, &target);
    for (a, b) in maps.iter().zip(&before) {
        assert!(relative_error(a, b) < 1e-10);
    }
}

#[test]
fn rank_deficient_family_is_close_to_the_best_low_rank_gram() {
    // third map is the sum of the first two, so any reachable Gram has rank 2
    let index = keys(3);
    let mut maps = family(2, 16, 7);
    maps.push(&maps[0] + &maps[1]);
    let target = GramMatrix {
        index: index.clone(),
        values: gram_of(&family(3, 16, 8)),
    };
    let report = apply(&mut maps, &index, &target);
    let (eigenvalues, _) = linalg::sym_eigen(&target.values);
    let best = eigenvalues[0];
    let got = linalg::frobenius(&(gram_of(&maps) - &target.values));
    assert!(maps.iter().all(|m| m.iter().all(|v| v.is_finite())));
    assert!((report.residual_after - got).abs() < 1e-9);
    assert!(report.min_eigenvalue.abs() < 1e-10);
    assert!(got >= best - 1e-12, "{got} below the low-rank optimum {best}");
    assert!(got <= 1.5 * best, "{got} vs optimum {best}");
}

#[test]
fn index_mismatch_is_rejected() {
    let index = keys(3);
    let target = GramMatrix {
        index: keys(2),
        values: Array2::eye(2),
    };
    let mut maps = family(3, 8, 1);
    let mut refs: Vec<&mut Image> = maps.iter_mut().collect();
    assert!(match_gram(&mut refs, &index, &target).is_err());
}

#[test]
fn pixel_matching_meets_its_tolerances() {
    for seed in 0..10 {
        let x = random_image(64, seed);
        let target = pixel_stats(&micro_texture(64, 50 + seed));
        let (y, report) = match_pixel_stats(&x, &target).unwrap();
        let s = pixel_stats(&y);
        assert!((s.mean - target.mean).abs() < 1e-10);
        assert!((s.variance - target.variance).abs() < 1e-10);
        assert!((s.skewness - target.skewness).abs() < 1e-4, "seed {seed}: {report:?}");
        assert!((s.kurtosis - target.kurtosis).abs() < 1e-4, "seed {seed}: {report:?}");
        for round in &report.residual_history {
            assert!(round.windows(2).all(|w| w[1] <= w[0]), "{round:?}");
        }
    }
}

#[test]
fn pixel_matching_reaches_the_range_ends() {
    // a narrow-tailed image against a target whose extremes lie further out
    let x = random_image(64, 21).mapv(|v| 0.3 + 0.4 * v);
    let target = pixel_stats(&micro_texture(64, 22));
    let (y, _) = match_pixel_stats(&x, &target).unwrap();
    let s = pixel_stats(&y);
    assert!((s.min - target.min).abs() < 1e-12 && (s.max - target.max).abs() < 1e-12, "{s:?}");
    assert!((s.skewness - target.skewness).abs() < 1e-6);
}

#[test]
fn pixel_matching_an_already_matched_image_is_identity() {
    let x = micro_texture(32, 4);
    let (y, _) = match_pixel_stats(&x, &pixel_stats(&x)).unwrap();
    assert!(max_abs_diff(&x, &y) < 1e-12);
}

#[test]
fn flat_range_with_variance_is_infeasible() {
    let target = PixelStats {
        mean: 0.5,
        variance: 0.1,
        skewness: 0.0,
        kurtosis: 2.0,
        min: 0.5,
        max: 0.5,
    };
    assert!(match_pixel_stats(&random_image(8, 1), &target).is_err());
}

#[test]
fn variance_matching_hits_target() {
    for (seed, preserve) in [(1, true), (2, false)] {
        let mut m = random_image(32, seed).mapv(|v| 3.0 * v + 1.0);
        let mean = m.mean().unwrap();
        match_variance(&mut m, 0.37, preserve);
        assert!((variance(&m) - 0.37).abs() < 1e-10);
        if preserve {
            assert!((m.mean().unwrap() - mean).abs() < 1e-12);
        }
    }
}
