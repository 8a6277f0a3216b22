use serde::{Deserialize, Serialize};

use super::bag::{Bag, MilDataset};
use crate::error::{Error, Result};

/// Smallest admissible scale; constant features are divided by this instead of zero.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Per-feature z-scoring fitted over all instances of all bags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Standardizer {
        Standardizer {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn fit(dataset: &MilDataset) -> Standardizer {
        let dim = dataset.dim();
        let n = dataset.total_instances() as f64;
        let mut mean = vec![0.0; dim];
        for bag in dataset.bags() {
            for inst in bag.instances() {
                for (m, v) in mean.iter_mut().zip(inst) {
                    *m += v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut var = vec![0.0; dim];
        for bag in dataset.bags() {
            for inst in bag.instances() {
                for ((s, v), m) in var.iter_mut().zip(inst).zip(&mean) {
                    let d = v - m;
                    *s += d * d;
                }
            }
        }
        let scale = var
            .into_iter()
            .map(|s| (s / n).sqrt().max(SCALE_FLOOR))
            .collect();
        Standardizer { mean, scale }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.scale.len() {
            return Err(Error::ShapeMismatch(format!(
                "standardizer mean has {} entries, scale has {}",
                self.mean.len(),
                self.scale.len()
            )));
        }
        if self.scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::config("standardizer scale entries must be positive"));
        }
        Ok(())
    }

    pub fn transform_instance(&self, inst: &[f64], out: &mut [f64]) {
        for (j, (o, v)) in out.iter_mut().zip(inst).enumerate() {
            *o = (v - self.mean[j]) / self.scale[j];
        }
    }

    pub fn apply_bag(&self, bag: &Bag) -> Result<Bag> {
        if bag.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: bag.dim(),
            });
        }
        Ok(bag.map_features(|j, v| (v - self.mean[j]) / self.scale[j]))
    }

    pub fn apply(&self, dataset: &MilDataset) -> Result<MilDataset> {
        if dataset.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dataset.dim(),
            });
        }
        let bags = dataset
            .bags()
            .iter()
            .map(|b| self.apply_bag(b))
            .collect::<Result<Vec<_>>>()?;
        MilDataset::new(bags)
    }
}

pub fn fit_standardizer(dataset: &MilDataset) -> Standardizer {
    Standardizer::fit(dataset)
}

pub fn apply_standardizer(std: &Standardizer, dataset: &MilDataset) -> Result<MilDataset> {
    std.apply(dataset)
}
