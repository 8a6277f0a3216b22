use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Bag label, restricted to the binary set {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_int(v: i64) -> Option<Label> {
        match v {
            -1 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.as_i8())
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// One sample: a non-empty ordered list of instances sharing a single label.
///
/// Instances are stored row-major in one buffer; `dim` is the instance length.
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    id: String,
    label: Label,
    dim: usize,
    features: Vec<f64>,
}

impl Bag {
    pub fn new(id: impl Into<String>, label: Label, instances: Vec<Vec<f64>>) -> Result<Bag> {
        let id = id.into();
        let first = instances.first().ok_or(Error::EmptyBag)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Consistency {
                bag: id,
                message: "instances must have at least one feature".into(),
            });
        }
        let mut features = Vec::with_capacity(dim * instances.len());
        for inst in &instances {
            if inst.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: inst.len(),
                });
            }
            if let Some(v) = inst.iter().find(|v| !v.is_finite()) {
                return Err(Error::Consistency {
                    bag: id,
                    message: format!("non-finite feature value {v}"),
                });
            }
            features.extend_from_slice(inst);
        }
        Ok(Bag {
            id,
            label,
            dim,
            features,
        })
    }

    /// Builds a bag from an already flattened row-major buffer.
    pub fn from_flat(
        id: impl Into<String>,
        label: Label,
        dim: usize,
        features: Vec<f64>,
    ) -> Result<Bag> {
        let id = id.into();
        if dim == 0 || features.is_empty() {
            return Err(Error::EmptyBag);
        }
        if features.len() % dim != 0 {
            return Err(Error::ShapeMismatch(format!(
                "bag {id}: {} values do not split into rows of {dim}",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Consistency {
                bag: id,
                message: "non-finite feature value".into(),
            });
        }
        Ok(Bag {
            id,
            label,
            dim,
            features,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn instance(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn instances(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn with_label(mut self, label: Label) -> Bag {
        self.label = label;
        self
    }

    /// Same bag with instances reordered: instance `i` of the result is instance `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Bag {
        let mut features = Vec::with_capacity(self.features.len());
        for &i in order {
            features.extend_from_slice(self.instance(i));
        }
        Bag {
            features,
            ..self.clone()
        }
    }

    pub(crate) fn map_features(&self, mut f: impl FnMut(usize, f64) -> f64) -> Bag {
        let dim = self.dim;
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % dim, v))
            .collect();
        Bag {
            features,
            ..self.clone()
        }
    }
}

/// A collection of bags with unique ids and a shared instance dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MilDataset {
    bags: Vec<Bag>,
    dim: usize,
}

impl MilDataset {
    pub fn new(bags: Vec<Bag>) -> Result<MilDataset> {
        let dim = bags.first().ok_or(Error::EmptyDataset)?.dim();
        let mut seen = HashSet::with_capacity(bags.len());
        for bag in &bags {
            if bag.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: bag.dim(),
                });
            }
            if !seen.insert(bag.id()) {
                return Err(Error::Consistency {
                    bag: bag.id().to_string(),
                    message: "duplicate bag id".into(),
                });
            }
        }
        Ok(MilDataset { bags, dim })
    }

    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    pub fn into_bags(self) -> Vec<Bag> {
        self.bags
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Bag> {
        self.bags.iter().find(|b| b.id() == id)
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.bags.iter().filter(|b| b.label() == label).count()
    }

    pub fn total_instances(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    /// Sub-dataset holding the bags whose positions are listed, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<MilDataset> {
        MilDataset::new(indices.iter().map(|&i| self.bags[i].clone()).collect())
    }
}
