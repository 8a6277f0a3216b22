//! Synthetic MIL problems for the two label regimes.
//!
//! * **Witness**: negative bags are pure background `N(0, I)`; a positive bag is
//!   identical except that a few instances are drawn from `N(mu, I)` with
//!   `|mu| = separation`. The label is decided by single instances, which favours
//!   max pooling.
//! * **Distribution shift**: every bag mixes two unit-variance Gaussians whose means
//!   are `separation` apart. Positive bags pick component A with probability 0.8,
//!   negative bags with 0.2, so the label depends on the whole bag, which favours
//!   mean pooling.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bag::{Bag, Label, MilDataset};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

/// Component-A probability for positive bags in the distribution-shift regime.
pub const SHIFT_POSITIVE_P: f64 = 0.8;
/// Component-A probability for negative bags in the distribution-shift regime.
pub const SHIFT_NEGATIVE_P: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Witness,
    DistributionShift,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Regime::Witness => "witness",
            Regime::DistributionShift => "distribution-shift",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Regime> {
        match s {
            "witness" => Ok(Regime::Witness),
            "distribution-shift" | "shift" => Ok(Regime::DistributionShift),
            other => Err(Error::config(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub regime: Regime,
    pub dim: usize,
    pub bags_per_class: usize,
    /// Inclusive range of instances per bag.
    pub instances: (usize, usize),
    pub seed: u64,
    pub separation: f64,
}

impl SynthSpec {
    pub fn witness(dim: usize, bags_per_class: usize, seed: u64) -> SynthSpec {
        SynthSpec {
            regime: Regime::Witness,
            dim,
            bags_per_class,
            instances: (5, 20),
            seed,
            separation: 3.0,
        }
    }

    pub fn distribution_shift(dim: usize, bags_per_class: usize, seed: u64) -> SynthSpec {
        SynthSpec {
            regime: Regime::DistributionShift,
            dim,
            bags_per_class,
            instances: (50, 50),
            seed,
            separation: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("dim must be positive"));
        }
        if self.bags_per_class == 0 {
            return Err(Error::config("bags per class must be positive"));
        }
        let (lo, hi) = self.instances;
        if lo < 1 || hi < lo {
            return Err(Error::config(format!(
                "instances per bag range [{lo}, {hi}] must satisfy 1 <= lo <= hi"
            )));
        }
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return Err(Error::config("separation must be a positive finite number"));
        }
        Ok(())
    }
}

/// Generation record for one bag.
#[derive(Debug, Clone, PartialEq)]
pub struct BagMeta {
    /// Witness regime: positions of instances drawn from the positive component.
    pub witnesses: Vec<usize>,
    /// Distribution-shift regime: per instance, whether it came from component A.
    pub from_component_a: Vec<bool>,
}

impl BagMeta {
    pub fn component_a_fraction(&self) -> f64 {
        let n = self.from_component_a.len().max(1) as f64;
        self.from_component_a.iter().filter(|&&a| a).count() as f64 / n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: MilDataset,
    /// Aligned with `dataset.bags()`.
    pub meta: Vec<BagMeta>,
    /// Unit direction along which the components are displaced.
    pub direction: Vec<f64>,
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<MilDataset> {
    generate_synthetic_with_meta(spec).map(|s| s.dataset)
}

pub fn generate_synthetic_with_meta(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let direction = unit_direction(spec.dim, derive_seed(spec.seed, &[u64::MAX]));

    let mut bags = Vec::with_capacity(2 * spec.bags_per_class);
    let mut meta = Vec::with_capacity(2 * spec.bags_per_class);
    for (class, label) in [Label::Positive, Label::Negative].into_iter().enumerate() {
        for i in 0..spec.bags_per_class {
            let mut rng = rng(derive_seed(spec.seed, &[class as u64, i as u64]));
            let n = rng.random_range(spec.instances.0..=spec.instances.1);
            let mut features: Vec<f64> = (0..n * spec.dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let mut record = BagMeta {
                witnesses: Vec::new(),
                from_component_a: Vec::new(),
            };
            match spec.regime {
                Regime::Witness => {
                    if label == Label::Positive {
                        let max_w = ((0.2 * n as f64).ceil() as usize).max(1);
                        let k = rng.random_range(1..=max_w);
                        let mut slots: Vec<usize> = (0..n).collect();
                        slots.shuffle(&mut rng);
                        let mut chosen = slots[..k].to_vec();
                        chosen.sort_unstable();
                        for &w in &chosen {
                            shift(&mut features, spec.dim, w, &direction, spec.separation);
                        }
                        record.witnesses = chosen;
                    }
                }
                Regime::DistributionShift => {
                    let p = match label {
                        Label::Positive => SHIFT_POSITIVE_P,
                        Label::Negative => SHIFT_NEGATIVE_P,
                    };
                    let half = 0.5 * spec.separation;
                    for j in 0..n {
                        let a = rng.random_bool(p);
                        let offset = if a { half } else { -half };
                        shift(&mut features, spec.dim, j, &direction, offset);
                        record.from_component_a.push(a);
                    }
                }
            }
            let prefix = match label {
                Label::Positive => "pos",
                Label::Negative => "neg",
            };
            bags.push(Bag::from_flat(
                format!("{prefix}{i:05}"),
                label,
                spec.dim,
                features,
            )?);
            meta.push(record);
        }
    }
    Ok(SynthDataset {
        dataset: MilDataset::new(bags)?,
        meta,
        direction,
    })
}

fn shift(features: &mut [f64], dim: usize, row: usize, direction: &[f64], amount: f64) {
    for (v, u) in features[row * dim..(row + 1) * dim].iter_mut().zip(direction) {
        *v += amount * u;
    }
}

fn unit_direction(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
