//! Statistical profile `S = (S⁰, S¹, S²)` of an image and the relative loss
//! between two profiles.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::Family;
use crate::linalg;
use crate::spectral::Image;
use crate::transform::{self, Banks, CoefficientSet, ReluKey, SecondLayerSet, Sign};

/// Variance below which skewness and kurtosis are reported as 0.
pub const FLAT_VARIANCE: f64 = 1e-12;

/// Floor applied to reported `log₁₀` losses.
pub const LOG_LOSS_FLOOR: f64 = -12.0;

/// `S⁰`: population moments and range of the pixel values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub min: f64,
    pub max: f64,
}

impl PixelStats {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.mean, self.variance, self.skewness, self.kurtosis, self.min, self.max]
    }
}

pub fn pixel_stats(x: &Image) -> PixelStats {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in x.iter() {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        min = min.min(v);
        max = max.max(v);
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let (skewness, kurtosis) = if m2 < FLAT_VARIANCE {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    };
    PixelStats {
        mean,
        variance: m2,
        skewness,
        kurtosis,
        min,
        max,
    }
}

/// Population variance.
pub fn variance(x: &Image) -> f64 {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Uncentered correlations `(1/N²)·Σ_u a_k(u)·a_k′(u)` between ReLU maps.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub index: Vec<ReluKey>,
    pub values: Array2<f64>,
}

impl GramMatrix {
    pub fn compute(maps: &[(ReluKey, &Image)]) -> Self {
        let index = maps.iter().map(|(k, _)| *k).collect();
        let images: Vec<&Image> = maps.iter().map(|(_, m)| *m).collect();
        Self {
            index,
            values: gram_of(&images),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Upper-triangle entries (diagonal included) that are not structural
    /// zeros, row by row.
    pub fn matched_entries(&self) -> Vec<f64> {
        let k = self.len();
        let mut out = Vec::with_capacity(k * (k + 1) / 2);
        for a in 0..k {
            for b in a..k {
                if !self.index[a].is_structural_zero(&self.index[b]) {
                    out.push(self.values[[a, b]]);
                }
            }
        }
        out
    }

    pub fn check_index(&self, other: &GramMatrix) -> Result<()> {
        if self.index != other.index {
            return Err(Error::IndexMismatch(format!(
                "Gram indices differ ({} vs {} keys)",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// `YᵀY / P` for maps stacked as columns, symmetrized exactly.
pub(crate) fn gram_of(maps: &[&Image]) -> Array2<f64> {
    if maps.is_empty() {
        return Array2::zeros((0, 0));
    }
    let y = linalg::stack_columns(maps);
    linalg::gram(&y, y.nrows() as f64)
}

#[derive(Serialize, Deserialize)]
struct GramRepr {
    index: Vec<ReluKey>,
    values: Vec<Vec<f64>>,
}

impl Serialize for GramMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GramRepr {
            index: self.index.clone(),
            values: self.values.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GramRepr::deserialize(d)?;
        let k = repr.index.len();
        if repr.values.len() != k || repr.values.iter().any(|r| r.len() != k) {
            return Err(serde::de::Error::custom(format!("Gram values are not {k}×{k}")));
        }
        let flat: Vec<f64> = repr.values.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((k, k), flat).map_err(serde::de::Error::custom)?;
        Ok(Self {
            index: repr.index,
            values,
        })
    }
}

/// `S¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstLayerStats {
    pub var_low: f64,
    pub var_high: f64,
    pub gram: GramMatrix,
}

/// Scalar statistics of one second-layer aggregate `(α₁, β₁, γ₁)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub family: Family,
    #[serde(with = "sign_serde")]
    pub sign: Sign,
    pub var_low: f64,
    pub var_high: f64,
    pub var_residual: Option<f64>,
}

/// `S²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondLayerStats {
    pub aggregates: Vec<AggregateStats>,
    pub gram: GramMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatProfile {
    pub s0: PixelStats,
    pub s1: FirstLayerStats,
    pub s2: Option<SecondLayerStats>,
}

mod sign_serde {
    use super::Sign;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(sign: &Sign, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match sign {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Sign, D::Error> {
        match String::deserialize(d)?.as_str() {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            other => Err(serde::de::Error::custom(format!("bad sign `{other}`"))),
        }
    }
}

pub fn first_layer_stats(coeffs: &CoefficientSet) -> FirstLayerStats {
    FirstLayerStats {
        var_low: variance(&coeffs.low),
        var_high: variance(&coeffs.high),
        gram: GramMatrix::compute(&coeffs.relu_maps(None)),
    }
}

pub fn second_layer_stats(u2: &SecondLayerSet) -> SecondLayerStats {
    let aggregates = u2
        .aggregates
        .iter()
        .map(|a| AggregateStats {
            family: a.family,
            sign: a.sign,
            var_low: variance(&a.decomp.low),
            var_high: variance(&a.decomp.high),
            var_residual: a.decomp.residual.as_ref().map(variance),
        })
        .collect();
    SecondLayerStats {
        aggregates,
        gram: GramMatrix::compute(&u2.relu_maps()),
    }
}

/// Full profile of `x`; `S²` is included when `layers ≥ 2`.
pub fn profile(x: &Image, banks: &Banks, layers: usize) -> Result<StatProfile> {
    let first = transform::forward_u1(x, &banks.first)?;
    let s2 = if layers >= 2 {
        Some(second_layer_stats(&transform::forward_u2(&first, banks)?))
    } else {
        None
    };
    Ok(StatProfile {
        s0: pixel_stats(x),
        s1: first_layer_stats(&first),
        s2,
    })
}

impl StatProfile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Layer-1 statistics as one vector: `S⁰`, low/high variances and the
    /// matched Gram entries.
    pub fn layer1_vector(&self) -> Vec<f64> {
        let mut v = self.s0.to_vec();
        v.push(self.s1.var_low);
        v.push(self.s1.var_high);
        v.extend(self.s1.gram.matched_entries());
        v
    }

    pub fn layer2_vector(&self) -> Option<Vec<f64>> {
        self.s2.as_ref().map(|s2| {
            let mut v = Vec::new();
            for a in &s2.aggregates {
                v.push(a.var_low);
                v.push(a.var_high);
                v.extend(a.var_residual);
            }
            v.extend(s2.gram.matched_entries());
            v
        })
    }
}

/// Per-layer relative loss `‖S_ref − S_cur‖ / ‖S_ref‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub loss1: f64,
    pub loss2: Option<f64>,
}

pub fn log10_clamped(v: f64) -> f64 {
    if v > 0.0 {
        v.log10().max(LOG_LOSS_FLOOR)
    } else {
        LOG_LOSS_FLOOR
    }
}

impl Loss {
    pub fn log10_loss1(&self) -> f64 {
        log10_clamped(self.loss1)
    }

    pub fn log10_loss2(&self) -> Option<f64> {
        self.loss2.map(log10_clamped)
    }
}

fn relative(reference: &[f64], current: &[f64]) -> f64 {
    let num: f64 = reference.iter().zip(current).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = reference.iter().map(|a| a * a).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

fn check_aggregates(a: &SecondLayerStats, b: &SecondLayerStats) -> Result<()> {
    let keys = |s: &SecondLayerStats| -> Vec<(Family, Sign, bool)> {
        s.aggregates
            .iter()
            .map(|g| (g.family, g.sign, g.var_residual.is_some()))
            .collect()
    };
    if keys(a) != keys(b) {
        return Err(Error::IndexMismatch("second-layer aggregates differ".into()));
    }
    a.gram.check_index(&b.gram)
}

/// Loss of `current` against `reference`. `loss2` is reported only when
/// both profiles carry `S²`.
pub fn relative_loss(reference: &StatProfile, current: &StatProfile) -> Result<Loss> {
    reference.s1.gram.check_index(&current.s1.gram)?;
    let loss1 = relative(&reference.layer1_vector(), &current.layer1_vector());
    let loss2 = match (&reference.s2, &current.s2) {
        (Some(r), Some(c)) => {
            check_aggregates(r, c)?;
            Some(relative(
                &reference.layer2_vector().expect("present"),
                &current.layer2_vector().expect("present"),
            ))
        }
        (None, None) => None,
        (Some(_), None) => None,
        (None, Some(_)) => {
            return Err(Error::IndexMismatch("reference profile lacks second-layer statistics".into()));
        }
    };
    Ok(Loss { loss1, loss2 })
}
