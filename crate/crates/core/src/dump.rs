//! Debug dumps: filter images with a text manifest, and coefficient maps as
//! raw little-endian `f32` files with a JSON manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{FilterBank, FilterKey};
use crate::imageio;
use crate::spectral::{fftshift, Image};
use crate::transform::{CoefficientSet, ReluKey, ReluPair};

pub const FILTER_MANIFEST: &str = "manifest.txt";
pub const COEFF_MANIFEST: &str = "manifest.json";

/// Writes every filter's spatial form (origin centred, linearly rescaled to
/// 8 bits) as `<key>.png` plus `manifest.txt`:
///
/// ```text
/// # frame_bounds <lower> <upper>
/// # config <json>
/// <key>\t<file>
/// ```
pub fn dump_filters(bank: &FilterBank, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let bounds = bank.frame_bounds();
    let mut manifest = format!(
        "# frame_bounds {:e} {:e}\n# config {}\n",
        bounds.lower,
        bounds.upper,
        serde_json::to_string(bank.config())?
    );
    for key in bank.keys() {
        let spatial = fftshift(&bank.spatial(&key).expect("key from bank"));
        let (lo, hi) = spatial
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let scaled = if hi > lo {
            spatial.mapv(|v| (v - lo) / (hi - lo))
        } else {
            Image::zeros(spatial.dim())
        };
        let file = format!("{key}.png");
        imageio::save_gray(&dir.join(&file), &scaled)?;
        manifest.push_str(&format!("{key}\t{file}\n"));
    }
    let path = dir.join(FILTER_MANIFEST);
    fs::write(&path, manifest)?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientManifest {
    pub grid_size: usize,
    /// `lowpass`, `highpass`, `residual` or a ReLU key such as `psi_e_j0_m0+`.
    pub maps: Vec<(String, String)>,
}

fn write_f32(path: &Path, map: &Image) -> Result<()> {
    let mut bytes = Vec::with_capacity(4 * map.len());
    for &v in map.iter() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

fn read_f32(path: &Path, n: usize) -> Result<Image> {
    let bytes = fs::read(path)?;
    if bytes.len() != 4 * n * n {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            actual: (bytes.len() / 4, 1),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Image::from_shape_vec((n, n), values).expect("length checked"))
}

/// Row-major `f32` maps named `<key>.f32` and `manifest.json`.
pub fn dump_coefficients(set: &CoefficientSet, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut entries: Vec<(String, &Image)> = vec![
        (FilterKey::LowPass.to_string(), &set.low),
        (FilterKey::HighPass.to_string(), &set.high),
    ];
    if let Some(r) = &set.residual {
        entries.push((FilterKey::Residual.to_string(), r));
    }
    for (key, map) in set.relu_maps(None) {
        entries.push((key.to_string(), map));
    }
    let mut maps = Vec::with_capacity(entries.len());
    for (key, map) in entries {
        let file = format!("{key}.f32");
        write_f32(&dir.join(&file), map)?;
        maps.push((key, file));
    }
    let manifest = CoefficientManifest {
        grid_size: set.low.nrows(),
        maps,
    };
    let path = dir.join(COEFF_MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Reads a dump written by [`dump_coefficients`] (values rounded to `f32`).
pub fn load_coefficients(dir: &Path) -> Result<CoefficientSet> {
    let manifest: CoefficientManifest = serde_json::from_str(&fs::read_to_string(dir.join(COEFF_MANIFEST))?)?;
    let n = manifest.grid_size;
    let (mut low, mut high, mut residual) = (None, None, None);
    let mut relu: Vec<(FilterKey, ReluPair)> = Vec::new();
    for (key, file) in &manifest.maps {
        let map = read_f32(&dir.join(file), n)?;
        match key.as_str() {
            "lowpass" => low = Some(map),
            "highpass" => high = Some(map),
            "residual" => residual = Some(map),
            other => {
                let k: ReluKey = other.parse()?;
                let pos = match relu.iter().position(|(f, _)| *f == k.filter) {
                    Some(p) => p,
                    None => {
                        relu.push((
                            k.filter,
                            ReluPair {
                                plus: Image::zeros((n, n)),
                                minus: Image::zeros((n, n)),
                            },
                        ));
                        relu.len() - 1
                    }
                };
                *relu[pos].1.get_mut(k.sign) = map;
            }
        }
    }
    Ok(CoefficientSet {
        low: low.ok_or_else(|| Error::MissingKey("lowpass".into()))?,
        high: high.ok_or_else(|| Error::MissingKey("highpass".into()))?,
        residual,
        relu,
    })
}
