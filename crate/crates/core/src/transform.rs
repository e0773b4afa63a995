//! Forward and inverse first- and second-layer ReLU wavelet transforms.
//!
//! All convolutions are circular and computed by pointwise spectral
//! multiplication. Per-filter work runs on the rayon pool; results are
//! always collected and summed in bank order so outputs do not depend on
//! scheduling.

use std::fmt;
use std::str::FromStr;

use ndarray::Zip;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{self, DualBank, Family, FilterBank, FilterBankConfig, FilterKey};
use crate::spectral::{Image, Spectrum};

/// ReLU sign γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn tag(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// `σ(t) = max(0, t)`.
#[inline]
pub fn relu(t: f64) -> f64 {
    t.max(0.0)
}

/// The pair `σ(x∗ψ)`, `σ(−x∗ψ)` for one wavelet.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluPair {
    pub plus: Image,
    pub minus: Image,
}

impl ReluPair {
    pub fn split(linear: &Image) -> Self {
        Self {
            plus: linear.mapv(relu),
            minus: linear.mapv(|t| relu(-t)),
        }
    }

    /// Re-linearizes via `t = σ(t) − σ(−t)`.
    pub fn linear(&self) -> Image {
        &self.plus - &self.minus
    }

    pub fn get(&self, sign: Sign) -> &Image {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }

    pub fn get_mut(&mut self, sign: Sign) -> &mut Image {
        match sign {
            Sign::Plus => &mut self.plus,
            Sign::Minus => &mut self.minus,
        }
    }
}

/// Identifies a ReLU map: first-layer maps have no parent, second-layer maps
/// carry the `(α₁β₁, γ₁)` aggregate they were computed from.
///
/// String form: `psi_o_j0_m1+` (first layer) or `o_m1-/psi_e_j2_m1+`
/// (second layer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReluKey {
    pub parent: Option<(Family, Sign)>,
    pub filter: FilterKey,
    pub sign: Sign,
}

impl ReluKey {
    /// `(λ, γ)` against `(λ, −γ)`: disjoint supports, hence a structural zero
    /// of the Gram matrix.
    pub fn is_structural_zero(&self, other: &ReluKey) -> bool {
        self.parent == other.parent && self.filter == other.filter && self.sign != other.sign
    }
}

impl fmt::Display for ReluKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((family, sign)) = self.parent {
            write!(f, "{}{}/", family, sign.tag())?;
        }
        write!(f, "{}{}", self.filter, self.sign.tag())
    }
}

fn split_sign(s: &str) -> Result<(&str, Sign)> {
    if let Some(rest) = s.strip_suffix('+') {
        Ok((rest, Sign::Plus))
    } else if let Some(rest) = s.strip_suffix('-') {
        Ok((rest, Sign::Minus))
    } else {
        Err(Error::IndexMismatch(format!("missing sign in `{s}`")))
    }
}

impl FromStr for ReluKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (parent, leaf) = match s.split_once('/') {
            Some((p, l)) => {
                let (family, sign) = split_sign(p)?;
                (Some((family.parse()?, sign)), l)
            }
            None => (None, s),
        };
        let (filter, sign) = split_sign(leaf)?;
        Ok(Self {
            parent,
            filter: filter.parse()?,
            sign,
        })
    }
}

impl Serialize for ReluKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReluKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `U¹` output: linear low/high pass (and residual for reduced banks) plus
/// ReLU pairs for every wavelet, in bank order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub low: Image,
    pub high: Image,
    pub residual: Option<Image>,
    pub relu: Vec<(FilterKey, ReluPair)>,
}

impl CoefficientSet {
    pub fn zeros_like(&self) -> Self {
        let z = |m: &Image| Image::zeros(m.dim());
        Self {
            low: z(&self.low),
            high: z(&self.high),
            residual: self.residual.as_ref().map(z),
            relu: self
                .relu
                .iter()
                .map(|(k, p)| {
                    (
                        *k,
                        ReluPair {
                            plus: z(&p.plus),
                            minus: z(&p.minus),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn pair(&self, key: &FilterKey) -> Option<&ReluPair> {
        self.relu.iter().find(|(k, _)| k == key).map(|(_, p)| p)
    }

    pub fn pair_mut(&mut self, key: &FilterKey) -> Option<&mut ReluPair> {
        self.relu.iter_mut().find(|(k, _)| k == key).map(|(_, p)| p)
    }

    /// ReLU maps in canonical order (per wavelet: γ = +1 then −1).
    pub fn relu_maps(&self, parent: Option<(Family, Sign)>) -> Vec<(ReluKey, &Image)> {
        let mut out = Vec::with_capacity(2 * self.relu.len());
        for (filter, pair) in &self.relu {
            for sign in Sign::BOTH {
                out.push((
                    ReluKey {
                        parent,
                        filter: *filter,
                        sign,
                    },
                    pair.get(sign),
                ));
            }
        }
        out
    }

    pub fn relu_maps_mut(&mut self, parent: Option<(Family, Sign)>) -> Vec<(ReluKey, &mut Image)> {
        let mut out = Vec::with_capacity(2 * self.relu.len());
        for (filter, pair) in self.relu.iter_mut() {
            let filter = *filter;
            let ReluPair { plus, minus } = pair;
            out.push((
                ReluKey {
                    parent,
                    filter,
                    sign: Sign::Plus,
                },
                plus,
            ));
            out.push((
                ReluKey {
                    parent,
                    filter,
                    sign: Sign::Minus,
                },
                minus,
            ));
        }
        out
    }

    /// Every linear-equivalent map keyed by filter: low, high, residual and
    /// the re-linearized wavelet responses.
    fn linear_maps(&self) -> Vec<(FilterKey, Image)> {
        let mut out = vec![(FilterKey::LowPass, self.low.clone()), (FilterKey::HighPass, self.high.clone())];
        if let Some(r) = &self.residual {
            out.push((FilterKey::Residual, r.clone()));
        }
        out.extend(self.relu.iter().map(|(k, p)| (*k, p.linear())));
        out
    }
}

/// `W_J x`: every filter response, in bank order.
pub fn wavelet_transform(x: &Image, bank: &FilterBank) -> Result<Vec<(FilterKey, Image)>> {
    let fft = bank.fft();
    fft.check(x)?;
    let x_hat = fft.forward(x);
    Ok(bank
        .filters()
        .par_iter()
        .map(|f| (f.key, fft.convolve(&x_hat, &f.spectrum)))
        .collect())
}

/// `U¹_J x = {x∗φ_J, x∗h, σ(γ·x∗ψ_λ)}`.
pub fn forward_u1(x: &Image, bank: &FilterBank) -> Result<CoefficientSet> {
    let mut low = None;
    let mut high = None;
    let mut residual = None;
    let mut relu = Vec::new();
    for (key, map) in wavelet_transform(x, bank)? {
        match key {
            FilterKey::LowPass => low = Some(map),
            FilterKey::HighPass => high = Some(map),
            FilterKey::Residual => residual = Some(map),
            _ => relu.push((key, ReluPair::split(&map))),
        }
    }
    Ok(CoefficientSet {
        low: low.ok_or_else(|| Error::MissingKey(FilterKey::LowPass.to_string()))?,
        high: high.ok_or_else(|| Error::MissingKey(FilterKey::HighPass.to_string()))?,
        residual,
        relu,
    })
}

/// Dual-frame synthesis `Σ_k c_k ∗ f̃_k` over keyed linear maps.
fn synthesize(maps: &[(FilterKey, Image)], duals: &DualBank) -> Result<Image> {
    let fft = duals.fft();
    for (key, map) in maps {
        if !duals.contains(key) {
            return Err(Error::MissingKey(format!("{key} has no dual filter")));
        }
        fft.check(map)?;
    }
    for key in duals.keys() {
        if !maps.iter().any(|(k, _)| *k == key) {
            return Err(Error::MissingKey(format!("coefficients lack {key}")));
        }
    }
    let n = fft.size();
    let terms: Vec<Spectrum> = maps
        .par_iter()
        .map(|(key, map)| {
            let mut s = fft.forward(map);
            Zip::from(&mut s).and(duals.get(key).expect("checked")).for_each(|c, &d| *c *= d);
            s
        })
        .collect();
    let mut acc = Spectrum::from_elem((n, n), Complex64::new(0.0, 0.0));
    for t in &terms {
        acc += t;
    }
    Ok(fft.inverse_real(&acc))
}

/// Inverts a (possibly modified) `U¹` coefficient set by re-linearizing
/// each ReLU pair and applying the dual frame.
pub fn invert_u1(coeffs: &CoefficientSet, duals: &DualBank) -> Result<Image> {
    synthesize(&coeffs.linear_maps(), duals)
}

/// Everything the first and second layers need: the first-layer bank, its
/// duals, the scale-summed bank and one reduced bank per orientation.
#[derive(Clone, Debug)]
pub struct Banks {
    pub first: FilterBank,
    pub first_duals: DualBank,
    pub summed: FilterBank,
    pub summed_duals: DualBank,
    reduced: Vec<(FilterBank, DualBank)>,
}

impl Banks {
    pub fn new(config: &FilterBankConfig) -> Result<Self> {
        Self::from_bank(filterbank::build_bank(config)?)
    }

    pub fn from_bank(first: FilterBank) -> Result<Self> {
        let first_duals = filterbank::dual_bank(&first)?;
        let summed = filterbank::summed_bank(&first)?;
        let summed_duals = filterbank::dual_bank(&summed)?;
        let reduced = (0..first.config().num_orientations)
            .map(|m| {
                let bank = filterbank::reduced_bank(&first, m)?;
                let duals = filterbank::dual_bank(&bank)?;
                Ok((bank, duals))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            first,
            first_duals,
            summed,
            summed_duals,
            reduced,
        })
    }

    pub fn config(&self) -> &FilterBankConfig {
        self.first.config()
    }

    /// Bank applied to the aggregate of `family`: the reduced bank at the
    /// same orientation for directional families, the full bank otherwise.
    pub fn second_layer(&self, family: Family) -> (&FilterBank, &DualBank) {
        match family {
            Family::Directional { orientation, .. } => {
                let (b, d) = &self.reduced[orientation];
                (b, d)
            }
            Family::Omni { .. } => (&self.first, &self.first_duals),
        }
    }
}

/// One scale-aggregated map `A = Σ_j σ(γ₁·x∗ψ_{j,α₁}^{β₁})` and its `U¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub family: Family,
    pub sign: Sign,
    pub map: Image,
    pub decomp: CoefficientSet,
}

/// `U²_J x`, one aggregate per `(α₁, β₁, γ₁)` in canonical family order.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondLayerSet {
    pub aggregates: Vec<Aggregate>,
}

impl SecondLayerSet {
    pub fn relu_maps(&self) -> Vec<(ReluKey, &Image)> {
        self.aggregates
            .iter()
            .flat_map(|a| a.decomp.relu_maps(Some((a.family, a.sign))))
            .collect()
    }

    pub fn relu_maps_mut(&mut self) -> Vec<(ReluKey, &mut Image)> {
        self.aggregates
            .iter_mut()
            .flat_map(|a| {
                let parent = Some((a.family, a.sign));
                a.decomp.relu_maps_mut(parent)
            })
            .collect()
    }
}

/// Scale aggregate `Σ_j relu(j, family, sign)` of a first-layer set.
pub fn aggregate(first: &CoefficientSet, family: Family, sign: Sign) -> Result<Image> {
    let mut acc: Option<Image> = None;
    for (key, pair) in &first.relu {
        if let FilterKey::Wavelet { family: f, .. } = key {
            if *f == family {
                match acc.as_mut() {
                    Some(a) => *a += pair.get(sign),
                    None => acc = Some(pair.get(sign).clone()),
                }
            }
        }
    }
    acc.ok_or_else(|| Error::MissingKey(format!("no wavelets of family {family}")))
}

/// Second layer from (possibly adjusted) first-layer ReLU maps.
pub fn forward_u2(first: &CoefficientSet, banks: &Banks) -> Result<SecondLayerSet> {
    let jobs: Vec<(Family, Sign)> = banks
        .config()
        .families()
        .into_iter()
        .flat_map(|f| Sign::BOTH.map(|s| (f, s)))
        .collect();
    let aggregates = jobs
        .par_iter()
        .map(|&(family, sign)| {
            let map = aggregate(first, family, sign)?;
            let (bank, _) = banks.second_layer(family);
            let decomp = forward_u1(&map, bank)?;
            Ok(Aggregate {
                family,
                sign,
                map,
                decomp,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SecondLayerSet { aggregates })
}

pub fn forward_u2_image(x: &Image, banks: &Banks) -> Result<SecondLayerSet> {
    forward_u2(&forward_u1(x, &banks.first)?, banks)
}

/// Reconstructs an image from `{x∗φ_J, x∗h, U²x}`: each aggregate is
/// recovered from its decomposition, γ₁ pairs are re-linearized into
/// `x ∗ Σ_j ψ_{j,α}^β`, and the summed bank's duals close the loop.
pub fn invert_u2(low: &Image, high: &Image, u2: &SecondLayerSet, banks: &Banks) -> Result<Image> {
    let recovered = u2
        .aggregates
        .par_iter()
        .map(|a| {
            let (_, duals) = banks.second_layer(a.family);
            invert_u1(&a.decomp, duals)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut maps = vec![(FilterKey::LowPass, low.clone()), (FilterKey::HighPass, high.clone())];
    for family in banks.config().families() {
        let find = |sign: Sign| {
            u2.aggregates
                .iter()
                .position(|a| a.family == family && a.sign == sign)
                .ok_or_else(|| Error::MissingKey(format!("aggregate {family} {sign:?}")))
        };
        let (p, m) = (find(Sign::Plus)?, find(Sign::Minus)?);
        maps.push((FilterKey::Summed(family), &recovered[p] - &recovered[m]));
    }
    synthesize(&maps, &banks.summed_duals)
}
