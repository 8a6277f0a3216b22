//! Finite-difference verification of back-propagation through pooling.
//!
//! Each case draws a random network (several layer stacks, every pooling kind)
//! and a random bag, then compares every analytic parameter gradient of the score
//! with a central difference. Parameters whose `±kink_radius` perturbation flips a
//! ReLU sign or a max-pooling argmax are excluded and counted, since the score is
//! not differentiable there.
//!
//! The difference quotient is formed from a double-double evaluation of the score,
//! so cancellation in `f(p + h) - f(p - h)` does not swamp small gradients.

mod dd;
mod reference;

pub use reference::reference_score;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::data::{Bag, Label};
use crate::error::Result;
use crate::network::{Activation, Architecture, Layer, Network, PoolKind};
use crate::seed::{derive_seed, rng};
use dd::Dd;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub trials: usize,
    /// Restrict to one pooling kind; `None` runs `trials` cases for each kind.
    pub pool: Option<PoolKind>,
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    pub kink_radius: f64,
    /// Gradients smaller than this in magnitude (both routes) are not compared.
    pub threshold: f64,
    /// Corrupts analytic gradients; negative control for the checker itself.
    pub sabotage: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            trials: 100,
            pool: None,
            seed: 0,
            step: 1e-6,
            tolerance: 1e-6,
            kink_radius: 1e-4,
            threshold: 1e-10,
            sabotage: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GradCheckSummary {
    pub cases: usize,
    pub compared: usize,
    /// Parameters near a ReLU kink or a max-pooling tie.
    pub excluded: usize,
    /// Parameters whose gradient is below the comparison threshold.
    pub negligible: usize,
    pub max_rel_error: f64,
    pub failures: usize,
}

impl GradCheckSummary {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.failures == 0 && self.max_rel_error < tolerance
    }

    fn merge(&mut self, other: &GradCheckSummary) {
        self.cases += other.cases;
        self.compared += other.compared;
        self.excluded += other.excluded;
        self.negligible += other.negligible;
        self.failures += other.failures;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
    }
}

/// A random network and bag for one gradient check.
pub fn random_case(pool: PoolKind, seed: u64) -> (Network, Bag) {
    let mut rng = rng(seed);
    let d = rng.random_range(1..=5);
    let m = rng.random_range(1..=6);
    let n = rng.random_range(1..=6);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let layer = |rows: usize, cols: usize, act: Activation, rng: &mut rand_chacha::ChaCha8Rng| {
        let scale = (2.0 / cols as f64).sqrt();
        Layer::new(
            rows,
            cols,
            (0..rows * cols).map(|_| scale * normal.sample(rng)).collect(),
            (0..rows).map(|_| 0.5 * normal.sample(rng)).collect(),
            act,
        )
        .expect("consistent shapes")
    };
    let variants = if pool == PoolKind::Max { 4 } else { 3 };
    let net = match rng.random_range(0..variants) {
        0 => Network::new(
            Architecture::proposed(d, m),
            pool,
            vec![layer(m, d, Activation::Relu, &mut rng)],
            vec![layer(1, m, Activation::Linear, &mut rng)],
        ),
        1 => {
            let h = rng.random_range(1..=4);
            Network::new(
                Architecture::proposed(d, m),
                pool,
                vec![layer(m, d, Activation::Relu, &mut rng)],
                vec![
                    layer(h, m, Activation::Relu, &mut rng),
                    layer(1, h, Activation::Linear, &mut rng),
                ],
            )
        }
        2 => {
            let h = rng.random_range(1..=4);
            Network::new(
                Architecture::proposed(d, m),
                pool,
                vec![
                    layer(h, d, Activation::Relu, &mut rng),
                    layer(m, h, Activation::Linear, &mut rng),
                ],
                vec![layer(1, m, Activation::Linear, &mut rng)],
            )
        }
        _ => Network::new(
            Architecture::prior_nn(d, m),
            PoolKind::Max,
            vec![
                layer(m, d, Activation::Relu, &mut rng),
                layer(1, m, Activation::Linear, &mut rng),
            ],
            vec![],
        ),
    }
    .expect("valid random network");
    let features = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let bag = Bag::from_flat("case", Label::Positive, d, features).expect("finite features");
    (net, bag)
}

/// Signs of every ReLU pre-activation and the max-pooling argmaxes.
fn pattern(net: &Network, bag: &Bag) -> Result<(Vec<bool>, Vec<usize>)> {
    let (_, trace) = net.forward_bag(bag)?;
    let mut signs = Vec::new();
    for (k, layer) in net.pre_layers().iter().enumerate() {
        if layer.activation == Activation::Relu {
            for i in 0..trace.instances() {
                signs.extend(trace.pre_activation(k, i).iter().map(|&z| z > 0.0));
            }
        }
    }
    for (k, layer) in net.post_layers().iter().enumerate() {
        if layer.activation == Activation::Relu {
            // post activations equal pre-activations exactly where positive
            signs.extend(trace.post_activations()[k].iter().map(|&a| a > 0.0));
        }
    }
    let argmax = if net.pool() == PoolKind::Max {
        trace.argmax().to_vec()
    } else {
        Vec::new()
    };
    Ok((signs, argmax))
}

fn score_at(net: &mut Network, params: &mut [f64], idx: usize, value: f64, bag: &Bag) -> Result<Dd> {
    let saved = params[idx];
    params[idx] = value;
    net.set_params(params)?;
    let s = reference_score(net, bag);
    params[idx] = saved;
    Ok(s)
}

/// Central difference of the reference score in parameter `idx`.
pub fn central_difference(net: &Network, bag: &Bag, idx: usize, step: f64) -> Result<f64> {
    let mut work = net.clone();
    let mut params = net.params();
    let p0 = params[idx];
    let (hi, lo) = (p0 + step, p0 - step);
    let plus = score_at(&mut work, &mut params, idx, hi, bag)?;
    let minus = score_at(&mut work, &mut params, idx, lo, bag)?;
    Ok(((plus - minus) / (Dd::from_f64(hi) - Dd::from_f64(lo))).to_f64())
}

fn pattern_at(
    net: &mut Network,
    params: &mut [f64],
    idx: usize,
    value: f64,
    bag: &Bag,
) -> Result<(Vec<bool>, Vec<usize>)> {
    let saved = params[idx];
    params[idx] = value;
    net.set_params(params)?;
    let p = pattern(net, bag);
    params[idx] = saved;
    p
}

/// Compares analytic and central-difference gradients for one network and bag.
pub fn check_case(net: &Network, bag: &Bag, opts: &GradCheckOptions) -> Result<GradCheckSummary> {
    let (_, trace) = net.forward_bag(bag)?;
    let mut analytic = net.backward_bag(&trace, 1.0)?.to_flat();
    if opts.sabotage {
        for (i, g) in analytic.iter_mut().enumerate() {
            *g = *g * 1.01 + if i % 2 == 0 { 1e-3 } else { 0.0 };
        }
    }
    let base_pattern = pattern(net, bag)?;
    let mut work = net.clone();
    let mut params = net.params();
    let mut summary = GradCheckSummary {
        cases: 1,
        ..Default::default()
    };
    for (idx, &a) in analytic.iter().enumerate() {
        let p0 = params[idx];
        let near_kink = pattern_at(&mut work, &mut params, idx, p0 + opts.kink_radius, bag)? != base_pattern
            || pattern_at(&mut work, &mut params, idx, p0 - opts.kink_radius, bag)? != base_pattern;
        if near_kink {
            summary.excluded += 1;
            continue;
        }
        let (hi, lo) = (p0 + opts.step, p0 - opts.step);
        let plus = score_at(&mut work, &mut params, idx, hi, bag)?;
        let minus = score_at(&mut work, &mut params, idx, lo, bag)?;
        let numeric = ((plus - minus) / (Dd::from_f64(hi) - Dd::from_f64(lo))).to_f64();
        let scale = a.abs().max(numeric.abs());
        if scale <= opts.threshold {
            summary.negligible += 1;
            continue;
        }
        let rel = (a - numeric).abs() / scale;
        summary.compared += 1;
        summary.max_rel_error = summary.max_rel_error.max(rel);
        if !(rel < opts.tolerance) {
            summary.failures += 1;
        }
    }
    Ok(summary)
}

pub fn run_gradcheck(opts: &GradCheckOptions) -> Result<GradCheckSummary> {
    let kinds: Vec<PoolKind> = match opts.pool {
        Some(p) => vec![p],
        None => PoolKind::ALL.to_vec(),
    };
    let mut total = GradCheckSummary::default();
    for &pool in &kinds {
        let k = PoolKind::ALL.iter().position(|&p| p == pool).unwrap_or(0);
        for trial in 0..opts.trials {
            let (net, bag) = random_case(pool, derive_seed(opts.seed, &[k as u64, trial as u64]));
            total.merge(&check_case(&net, &bag, opts)?);
        }
    }
    Ok(total)
}
