use rand::seq::SliceRandom;
use serde::Serialize;

use super::adam::AdamState;
use super::config::TrainConfig;
use crate::data::{Bag, Label, MilDataset, Standardizer};
use crate::error::{Error, Result};
use crate::network::net::{backward_reuse, forward_reuse, BackwardScratch};
use crate::network::{ForwardTrace, Gradients, Network};
use crate::seed::{derive_seed, rng};

/// Batch objectives are logged at this interval.
pub const BATCH_LOG_EVERY: usize = 100;
/// The full training objective is evaluated at this interval.
pub const FULL_OBJECTIVE_EVERY: usize = 500;

/// Margin-1 hinge loss and its derivative with respect to the score.
pub fn hinge_loss(score: f64, label: Label) -> (f64, f64) {
    let y = label.sign();
    let margin = y * score;
    if margin < 1.0 {
        (1.0 - margin, -y)
    } else {
        (0.0, 0.0)
    }
}

/// Mean hinge loss over `bags` plus `lambda` times the L1 norm of all weight matrices.
pub fn objective(net: &Network, bags: &[Bag], lambda: f64) -> Result<f64> {
    if bags.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for bag in bags {
        total += hinge_loss(net.score(bag)?, bag.label()).0;
    }
    Ok(total / bags.len() as f64 + lambda * net.weight_l1())
}

/// Mean hinge loss and mean hinge gradient over a batch (no L1 term).
///
/// Per-bag gradients are summed in batch order and then divided by the batch size.
pub fn batch_gradient(net: &Network, batch: &[&Bag]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut loss = 0.0;
    let mut grads = net.zero_gradients();
    let mut bag_grads = net.zero_gradients();
    let mut trace = ForwardTrace::empty();
    let mut sort = Vec::new();
    let mut scratch = BackwardScratch::default();
    for bag in batch {
        let score = forward_reuse(net, bag, &mut trace, &mut sort)?;
        let (l, dscore) = hinge_loss(score, bag.label());
        loss += l;
        if dscore != 0.0 {
            backward_reuse(net, &trace, dscore, &mut bag_grads, &mut scratch)?;
            grads.add_assign(&bag_grads)?;
        }
    }
    let size = batch.len() as f64;
    grads.divide(size);
    Ok((loss / size, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub iteration: usize,
    /// Batch hinge loss plus L1 term, before that iteration's update.
    pub batch_objective: f64,
    /// Objective over the whole training set after the update, every
    /// [`FULL_OBJECTIVE_EVERY`] iterations and at the last one.
    pub full_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub final_weight_l1: f64,
    pub iterations: usize,
}

/// Trains `net` on `dataset` by mini-batch Adam on hinge loss with L1.
///
/// Bags are drawn epoch by epoch from a seeded shuffle without replacement; the
/// last batch of an epoch may be short. With `standardize`, a standardizer is fit
/// on `dataset`, training runs on standardized bags, and the returned network
/// carries the standardizer so it scores raw bags.
pub fn train(net: &Network, dataset: &MilDataset, config: &TrainConfig) -> Result<(Network, TrainReport)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: dataset.dim(),
        });
    }

    let (mut net, standardized, standardizer) = if config.standardize {
        let s = Standardizer::fit(dataset);
        let data = s.apply(dataset)?;
        (net.clone().with_standardizer(None)?, data, Some(s))
    } else {
        (net.clone(), dataset.clone(), None)
    };
    let bags = standardized.bags();
    let n = bags.len();

    let initial_objective = objective(&net, bags, config.lambda)?;
    let mut params = net.params();
    let mask = net.weight_mask();
    let mut state = AdamState::new(params.len());
    let mut rng = rng(derive_seed(config.seed, &[0xBA7C]));
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut checkpoints = Vec::new();
    let mut batch: Vec<&Bag> = Vec::with_capacity(config.batch_size);

    for iteration in 1..=config.max_iterations {
        if cursor >= n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let end = (cursor + config.batch_size).min(n);
        batch.clear();
        batch.extend(order[cursor..end].iter().map(|&i| &bags[i]));
        cursor = end;

        let (loss, grads) = batch_gradient(&net, &batch)?;
        let batch_objective = loss + config.lambda * net.weight_l1();
        state.step(&mut params, &grads.to_flat(), &mask, &config.adam, config.lambda)?;
        net.set_params(&params)?;

        let last = iteration == config.max_iterations;
        let full_objective = if iteration % FULL_OBJECTIVE_EVERY == 0 || last {
            Some(objective(&net, bags, config.lambda)?)
        } else {
            None
        };
        if iteration % BATCH_LOG_EVERY == 0 || full_objective.is_some() {
            checkpoints.push(Checkpoint {
                iteration,
                batch_objective,
                full_objective,
            });
        }
    }

    let final_objective = match checkpoints.last() {
        Some(Checkpoint {
            full_objective: Some(v),
            ..
        }) => *v,
        _ => initial_objective,
    };
    let report = TrainReport {
        initial_objective,
        final_objective,
        checkpoints,
        final_weight_l1: net.weight_l1(),
        iterations: config.max_iterations,
    };
    let net = if standardizer.is_some() {
        net.with_standardizer(standardizer)?
    } else {
        net
    };
    Ok((net, report))
}
