//! Iterative projection: repeatedly match the reference statistics in the
//! transform domain and invert back to an image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{FilterBankConfig, FilterKey};
use crate::linalg;
use crate::projection::{self, AdjustmentReport};
use crate::spectral::Image;
use crate::statistics::{self, Loss, StatProfile};
use crate::transform::{self, Banks};

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Init {
    /// Uniform i.i.d. noise over the reference's value range.
    #[default]
    Noise,
    Image(Image),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub bank: FilterBankConfig,
    /// 1 or 2.
    pub layers: usize,
    pub iterations_layer1: usize,
    pub iterations_layer2: usize,
    /// Stop a phase once its own loss is at most this value (0 disables).
    pub stop_epsilon: f64,
    pub rng_seed: u64,
    #[serde(skip)]
    pub init: Init,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            bank: FilterBankConfig::default(),
            layers: 2,
            iterations_layer1: 100,
            iterations_layer2: 600,
            stop_epsilon: 0.0,
            rng_seed: 0,
            init: Init::Noise,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.layers) {
            return Err(Error::InvalidConfig(format!("layers must be 1 or 2, got {}", self.layers)));
        }
        if !(self.stop_epsilon >= 0.0) {
            return Err(Error::InvalidConfig("stop_epsilon must be non-negative".into()));
        }
        self.bank.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss1: f64,
    pub loss2: Option<f64>,
}

impl LossRecord {
    fn new(iteration: usize, loss: Loss) -> Self {
        Self {
            iteration,
            loss1: loss.loss1,
            loss2: loss.loss2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisState {
    pub image: Image,
    pub iteration: usize,
    pub loss_history: Vec<LossRecord>,
    pub seed: u64,
}

impl SynthesisState {
    pub fn new(image: Image, seed: u64) -> Self {
        Self {
            image,
            iteration: 0,
            loss_history: Vec::new(),
            seed,
        }
    }

    fn record(&mut self, loss: Loss) {
        self.loss_history.push(LossRecord::new(self.iteration, loss));
    }
}

/// Starting image: uniform noise on `[min, max]` of the reference, or the
/// supplied image.
pub fn init_image(config: &SynthesisConfig, reference: &Image) -> Result<Image> {
    match &config.init {
        Init::Image(img) => {
            if img.dim() != reference.dim() {
                return Err(Error::ShapeMismatch {
                    expected: reference.dim(),
                    actual: img.dim(),
                });
            }
            Ok(img.clone())
        }
        Init::Noise => {
            let s = statistics::pixel_stats(reference);
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            Ok(Image::from_shape_fn(reference.dim(), |_| {
                if s.max > s.min {
                    rng.gen_range(s.min..=s.max)
                } else {
                    s.min
                }
            }))
        }
    }
}

fn pixel_step(state: &mut SynthesisState, reference: &StatProfile, report: &mut AdjustmentReport) -> Result<()> {
    let (x, pixel) = projection::match_pixel_stats(&state.image, &reference.s0)?;
    state.image = x;
    report.pixel = Some(pixel);
    Ok(())
}

fn first_layer_step(
    x: &Image,
    reference: &StatProfile,
    banks: &Banks,
    report: &mut AdjustmentReport,
) -> Result<transform::CoefficientSet> {
    let mut coeffs = transform::forward_u1(x, &banks.first)?;
    let s1 = &reference.s1;
    report.variance.push((
        FilterKey::LowPass.to_string(),
        projection::match_variance(&mut coeffs.low, s1.var_low, true),
    ));
    report.variance.push((
        FilterKey::HighPass.to_string(),
        projection::match_variance(&mut coeffs.high, s1.var_high, false),
    ));
    let mut maps = coeffs.relu_maps_mut(None);
    let index: Vec<_> = maps.iter().map(|(k, _)| *k).collect();
    let mut images: Vec<&mut Image> = maps.iter_mut().map(|(_, m)| &mut **m).collect();
    let gram = projection::match_gram(&mut images, &index, &s1.gram)?;
    report.gram.push(("layer1".into(), gram));
    Ok(coeffs)
}

/// Re-imposes pixel statistics on the inverted image and records its loss
/// at the depth of the reference profile.
fn finish(state: &mut SynthesisState, inverted: Image, reference: &StatProfile, banks: &Banks) -> Result<()> {
    state.image = projection::match_pixel_stats(&inverted, &reference.s0)?.0;
    state.iteration += 1;
    let layers = if reference.s2.is_some() { 2 } else { 1 };
    let current = statistics::profile(&state.image, banks, layers)?;
    state.record(statistics::relative_loss(reference, &current)?);
    Ok(())
}

/// One first-layer cycle: pixel statistics, low/high variances, first-layer
/// Gram, then dual-frame inversion. Pixel statistics are imposed again on
/// the inverted image, whose loss is recorded.
pub fn iterate_layer1(state: &mut SynthesisState, reference: &StatProfile, banks: &Banks) -> Result<AdjustmentReport> {
    let mut report = AdjustmentReport::default();
    pixel_step(state, reference, &mut report)?;
    let coeffs = first_layer_step(&state.image, reference, banks, &mut report)?;
    let inverted = transform::invert_u1(&coeffs, &banks.first_duals)?;
    finish(state, inverted, reference, banks)?;
    Ok(report)
}

/// One two-layer cycle: everything [`iterate_layer1`] matches, then the
/// second layer built from the adjusted first-layer maps, then inversion
/// through the scale-summed bank.
pub fn iterate_layer2(state: &mut SynthesisState, reference: &StatProfile, banks: &Banks) -> Result<AdjustmentReport> {
    let s2 = reference
        .s2
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("reference profile has no second-layer statistics".into()))?;
    let mut report = AdjustmentReport::default();
    pixel_step(state, reference, &mut report)?;
    let coeffs = first_layer_step(&state.image, reference, banks, &mut report)?;
    let mut u2 = transform::forward_u2(&coeffs, banks)?;
    if u2.aggregates.len() != s2.aggregates.len() {
        return Err(Error::IndexMismatch("second-layer aggregate count".into()));
    }
    for (agg, target) in u2.aggregates.iter_mut().zip(&s2.aggregates) {
        if agg.family != target.family || agg.sign != target.sign {
            return Err(Error::IndexMismatch(format!("aggregate {} out of order", agg.family)));
        }
        let name = format!("{}{}", agg.family, if agg.sign.value() > 0.0 { '+' } else { '-' });
        let d = &mut agg.decomp;
        report.variance.push((
            format!("{name}/lowpass"),
            projection::match_variance(&mut d.low, target.var_low, true),
        ));
        report.variance.push((
            format!("{name}/highpass"),
            projection::match_variance(&mut d.high, target.var_high, false),
        ));
        if let (Some(r), Some(v)) = (d.residual.as_mut(), target.var_residual) {
            report
                .variance
                .push((format!("{name}/residual"), projection::match_variance(r, v, false)));
        }
    }
    {
        let mut maps = u2.relu_maps_mut();
        let index: Vec<_> = maps.iter().map(|(k, _)| *k).collect();
        let mut images: Vec<&mut Image> = maps.iter_mut().map(|(_, m)| &mut **m).collect();
        let gram = projection::match_gram(&mut images, &index, &s2.gram)?;
        report.gram.push(("layer2".into(), gram));
    }
    let inverted = transform::invert_u2(&coeffs.low, &coeffs.high, &u2, banks)?;
    finish(state, inverted, reference, banks)?;
    Ok(report)
}

/// Checkpoint hook, called after every iteration.
pub trait Observer {
    fn iteration(&mut self, state: &SynthesisState, report: &AdjustmentReport);
}

impl<F: FnMut(&SynthesisState, &AdjustmentReport)> Observer for F {
    fn iteration(&mut self, state: &SynthesisState, report: &AdjustmentReport) {
        self(state, report)
    }
}

pub struct SynthesisOutput {
    pub image: Image,
    pub loss_history: Vec<LossRecord>,
    /// Iteration count at which the first-layer phase ended.
    pub phase1_end: usize,
}

pub fn synthesize(reference: &Image, config: &SynthesisConfig) -> Result<SynthesisOutput> {
    synthesize_with(reference, config, &mut |_: &SynthesisState, _: &AdjustmentReport| {})
}

/// Pixel-matches the initial image, runs the first-layer phase, then (for
/// two layers) the second-layer phase starting from its result.
pub fn synthesize_with(reference: &Image, config: &SynthesisConfig, observer: &mut dyn Observer) -> Result<SynthesisOutput> {
    config.validate()?;
    let n = config.bank.grid_size;
    if reference.dim() != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            actual: reference.dim(),
        });
    }
    let banks = Banks::new(&config.bank)?;
    let target = statistics::profile(reference, &banks, config.layers)?;
    let init = projection::match_pixel_stats(&init_image(config, reference)?, &target.s0)?.0;
    let mut state = SynthesisState::new(init, config.rng_seed);

    let reached = |loss: f64| config.stop_epsilon > 0.0 && loss <= config.stop_epsilon;
    for _ in 0..config.iterations_layer1 {
        let report = iterate_layer1(&mut state, &target, &banks)?;
        observer.iteration(&state, &report);
        if reached(state.loss_history.last().expect("recorded").loss1) {
            break;
        }
    }
    let phase1_end = state.iteration;
    if config.layers == 2 {
        for _ in 0..config.iterations_layer2 {
            let report = iterate_layer2(&mut state, &target, &banks)?;
            observer.iteration(&state, &report);
            if reached(state.loss_history.last().and_then(|r| r.loss2).unwrap_or(f64::INFINITY)) {
                break;
            }
        }
    }

    Ok(SynthesisOutput {
        image: state.image,
        loss_history: state.loss_history,
        phase1_end,
    })
}

/// Color synthesis: channels are decorrelated with the reference's 3×3
/// channel PCA, each component is synthesized on its own (seeds offset by
/// channel; a supplied init image is ignored), then the result is rotated back and each channel re-matched to
/// the reference's pixel statistics.
pub fn synthesize_color(reference: &[Image; 3], config: &SynthesisConfig) -> Result<([Image; 3], Vec<Vec<LossRecord>>)> {
    let dim = reference[0].dim();
    if reference.iter().any(|c| c.dim() != dim) {
        return Err(Error::ShapeMismatch {
            expected: dim,
            actual: reference.iter().map(|c| c.dim()).find(|&d| d != dim).unwrap_or(dim),
        });
    }
    let means: Vec<f64> = reference.iter().map(|c| c.mean().unwrap_or(0.0)).collect();
    let cov = ndarray::Array2::from_shape_fn((3, 3), |(a, b)| {
        reference[a]
            .iter()
            .zip(reference[b].iter())
            .map(|(u, v)| (u - means[a]) * (v - means[b]))
            .sum::<f64>()
            / reference[a].len() as f64
    });
    let (_, basis) = linalg::sym_eigen(&cov);
    let project = |c: usize| {
        let mut out = Image::zeros(dim);
        for a in 0..3 {
            out.scaled_add(basis[[a, c]], &reference[a].mapv(|v| v - means[a]));
        }
        out
    };

    let mut components = Vec::with_capacity(3);
    let mut histories = Vec::with_capacity(3);
    for c in 0..3 {
        let mut cfg = config.clone();
        cfg.rng_seed = config.rng_seed.wrapping_add(c as u64);
        cfg.init = Init::Noise;
        let comp = project(c);
        if statistics::variance(&comp) < statistics::FLAT_VARIANCE {
            components.push(comp);
            histories.push(Vec::new());
            continue;
        }
        let out = synthesize(&comp, &cfg)?;
        components.push(out.image);
        histories.push(out.loss_history);
    }

    let mut channels: Vec<Image> = Vec::with_capacity(3);
    for a in 0..3 {
        let mut ch = Image::from_elem(dim, means[a]);
        for (c, comp) in components.iter().enumerate() {
            ch.scaled_add(basis[[a, c]], comp);
        }
        let (ch, _) = projection::match_pixel_stats(&ch, &statistics::pixel_stats(&reference[a]))?;
        channels.push(ch);
    }
    let [r, g, b]: [Image; 3] = channels.try_into().expect("three channels");
    Ok(([r, g, b], histories))
}
