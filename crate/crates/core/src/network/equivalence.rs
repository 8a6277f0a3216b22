//! The instance-level max-pooled network is the in-network formalism with a
//! one-dimensional embedding, max pooling and nothing after the pool.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::layer::Layer;
use super::net::{ArchKind, Architecture, Network};
use super::pooling::PoolKind;
use crate::data::{Bag, Label};
use crate::error::{Error, Result};
use crate::seed::rng;

pub const PROBE_BAGS: usize = 64;
const PROBE_SEED: u64 = 0x5EED_0F_B465;

/// Deterministic probe bags of 1 to 12 instances with `N(0, 4)` features.
pub fn probe_bags(dim: usize) -> Vec<Bag> {
    let mut rng = rng(PROBE_SEED ^ dim as u64);
    (0..PROBE_BAGS)
        .map(|i| {
            let n = rng.random_range(1..=12);
            let features = (0..n * dim)
                .map(|_| 2.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            Bag::from_flat(format!("probe{i}"), Label::Positive, dim, features)
                .expect("probe features are finite")
        })
        .collect()
}

impl Network {
    /// The proposed-architecture network sharing this prior-nn network's
    /// per-instance layers: `m = 1`, max pooling, identity after the pool.
    pub fn as_special_case(&self) -> Result<Network> {
        if self.architecture().kind != ArchKind::PriorNn {
            return Err(Error::config("special-case counterpart requires a prior-nn network"));
        }
        Network::new(
            Architecture::proposed(self.input_dim(), 1),
            PoolKind::Max,
            self.pre_layers().to_vec(),
            Vec::new(),
        )?
        .with_standardizer(self.standardizer().cloned())
    }
}

/// `true` iff both networks give bit-identical scores on every probe bag.
///
/// `proposed` must have a one-dimensional pooled embedding; anything wider is a
/// shape error rather than a `false`.
pub fn equivalence_check(prior: &Network, proposed: &Network) -> Result<bool> {
    if prior.architecture().kind != ArchKind::PriorNn {
        return Err(Error::config("first network must be prior-nn"));
    }
    if proposed.architecture().kind != ArchKind::Proposed {
        return Err(Error::config("second network must use the proposed architecture"));
    }
    if proposed.pooled_dim() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "proposed network pools {} dimensions, the special case needs 1",
            proposed.pooled_dim()
        )));
    }
    if proposed.input_dim() != prior.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.input_dim(),
            got: proposed.input_dim(),
        });
    }
    for bag in probe_bags(prior.input_dim()) {
        if prior.score(&bag)? != proposed.score(&bag)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builds both networks from shared per-instance layers and compares them.
pub fn equivalence_check_shared(per_instance: &[Layer]) -> Result<bool> {
    let first = per_instance
        .first()
        .ok_or_else(|| Error::ShapeMismatch("no per-instance layers".into()))?;
    let hidden = first.rows;
    let prior = Network::new(
        Architecture::prior_nn(first.cols, hidden),
        PoolKind::Max,
        per_instance.to_vec(),
        Vec::new(),
    )?;
    let proposed = prior.as_special_case()?;
    equivalence_check(&prior, &proposed)
}
