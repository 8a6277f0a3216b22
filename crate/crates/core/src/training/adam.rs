use super::config::{AdamParams, TrainConfig};
use crate::error::{Error, Result};
use crate::network::{Gradients, Network};

/// Adam moment estimates over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> AdamState {
        AdamState {
            first: vec![0.0; len],
            second: vec![0.0; len],
            t: 0,
        }
    }

    pub fn for_network(net: &Network) -> AdamState {
        AdamState::new(net.param_count())
    }

    /// One bias-corrected Adam update in place.
    ///
    /// Entries flagged in `l1_mask` get `lambda * sign(w)` (with `sign(0) = 0`)
    /// added to their gradient first.
    pub fn step(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        l1_mask: &[bool],
        adam: &AdamParams,
        lambda: f64,
    ) -> Result<()> {
        let n = params.len();
        if grads.len() != n || l1_mask.len() != n || self.first.len() != n || self.second.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "adam step over {n} parameters given {} gradients, {} mask entries, {} moments",
                grads.len(),
                l1_mask.len(),
                self.first.len()
            )));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - adam.beta1.powi(t);
        let c2 = 1.0 - adam.beta2.powi(t);
        for i in 0..n {
            let mut g = grads[i];
            if l1_mask[i] && lambda != 0.0 {
                g += lambda * sign(params[i]);
            }
            let m = adam.beta1 * self.first[i] + (1.0 - adam.beta1) * g;
            let v = adam.beta2 * self.second[i] + (1.0 - adam.beta2) * g * g;
            self.first[i] = m;
            self.second[i] = v;
            let m_hat = m / c1;
            let v_hat = v / c2;
            params[i] -= adam.alpha * m_hat / (v_hat.sqrt() + adam.epsilon);
        }
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Applies one Adam step with the L1 subgradient to `net`'s parameters.
pub fn adam_step(
    net: &Network,
    grads: &Gradients,
    state: &AdamState,
    config: &TrainConfig,
) -> Result<(Network, AdamState)> {
    let mut params = net.params();
    let mut state = state.clone();
    state.step(
        &mut params,
        &grads.to_flat(),
        &net.weight_mask(),
        &config.adam,
        config.lambda,
    )?;
    let mut next = net.clone();
    next.set_params(&params)?;
    Ok((next, state))
}
