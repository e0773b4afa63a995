//! Run configuration: CLI flags override a JSON file, which overrides the
//! built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wavetex::filterbank::FilterBankConfig;
use wavetex::synthesis::SynthesisConfig;

use crate::CliError;

/// Every field optional; the same shape is used for the JSON file and for
/// the flags parsed by clap.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub layers: Option<usize>,
    pub scales: Option<usize>,
    pub orientations: Option<usize>,
    pub angular: Option<usize>,
    pub iters1: Option<usize>,
    pub iters2: Option<usize>,
    pub seed: Option<u64>,
    pub size: Option<usize>,
    pub periodize: Option<bool>,
    pub gray: Option<bool>,
    pub window_sigma: Option<f64>,
    pub central_freq: Option<f64>,
    pub lowpass_sigma: Option<f64>,
    pub tighten: Option<bool>,
    pub stop_epsilon: Option<f64>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::BadArgs(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            layers: self.layers.or(lower.layers),
            scales: self.scales.or(lower.scales),
            orientations: self.orientations.or(lower.orientations),
            angular: self.angular.or(lower.angular),
            iters1: self.iters1.or(lower.iters1),
            iters2: self.iters2.or(lower.iters2),
            seed: self.seed.or(lower.seed),
            size: self.size.or(lower.size),
            periodize: self.periodize.or(lower.periodize),
            gray: self.gray.or(lower.gray),
            window_sigma: self.window_sigma.or(lower.window_sigma),
            central_freq: self.central_freq.or(lower.central_freq),
            lowpass_sigma: self.lowpass_sigma.or(lower.lowpass_sigma),
            tighten: self.tighten.or(lower.tighten),
            stop_epsilon: self.stop_epsilon.or(lower.stop_epsilon),
        }
    }
}

/// Fully resolved settings, echoed into the run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub size: usize,
    pub periodize: bool,
    pub gray: bool,
    pub synthesis: SynthesisConfig,
}

pub const DEFAULT_SIZE: usize = 256;

impl RunConfig {
    pub fn resolve(o: Overrides) -> Self {
        let layers = o.layers.unwrap_or(2);
        let base = FilterBankConfig::default();
        let size = o.size.unwrap_or(DEFAULT_SIZE);
        let bank = FilterBankConfig {
            grid_size: size,
            num_scales: o.scales.unwrap_or(if layers == 1 { 6 } else { 5 }),
            num_orientations: o.orientations.unwrap_or(base.num_orientations),
            num_angular: o.angular.unwrap_or(base.num_angular),
            window_sigma: o.window_sigma.unwrap_or(base.window_sigma),
            central_freq: o.central_freq.unwrap_or(base.central_freq),
            lowpass_sigma: o.lowpass_sigma.unwrap_or(base.lowpass_sigma),
            tighten: o.tighten.unwrap_or(base.tighten),
        };
        let defaults = SynthesisConfig::default();
        RunConfig {
            size,
            periodize: o.periodize.unwrap_or(false),
            gray: o.gray.unwrap_or(false),
            synthesis: SynthesisConfig {
                bank,
                layers,
                iterations_layer1: o.iters1.unwrap_or(defaults.iterations_layer1),
                iterations_layer2: o.iters2.unwrap_or(defaults.iterations_layer2),
                stop_epsilon: o.stop_epsilon.unwrap_or(defaults.stop_epsilon),
                rng_seed: o.seed.unwrap_or(defaults.rng_seed),
                init: Default::default(),
            },
        }
    }
}
