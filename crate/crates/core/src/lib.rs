//! Texture synthesis by projection onto multiscale ReLU-wavelet statistics.

pub mod dump;
pub mod error;
pub mod filterbank;
pub mod imageio;
pub mod linalg;
pub mod projection;
pub mod spectral;
pub mod statistics;
pub mod synthesis;
pub mod theoremlab;
pub mod transform;

pub use error::{Error, Result};
pub use filterbank::{build_bank, FilterBank, FilterBankConfig};
pub use spectral::Image;
pub use statistics::{profile, relative_loss, StatProfile};
pub use synthesis::{synthesize, SynthesisConfig, SynthesisOutput};
pub use transform::Banks;
