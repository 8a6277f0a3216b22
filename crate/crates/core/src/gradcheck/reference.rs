//! Extended-precision bag score, written directly from the layer/pool definitions
//! and independent of the production forward pass.

use super::dd::Dd;
use crate::data::Bag;
use crate::network::{Activation, Layer, Network, PoolKind};

fn dense(layer: &Layer, input: &[Dd]) -> Vec<Dd> {
    (0..layer.rows)
        .map(|i| {
            let mut z = Dd::from_f64(layer.bias[i]);
            for (j, x) in input.iter().enumerate() {
                z = z + Dd::from_f64(layer.weights[i * layer.cols + j]) * *x;
            }
            match layer.activation {
                Activation::Relu => z.max(Dd::ZERO),
                Activation::Linear => z,
            }
        })
        .collect()
}

pub fn reference_score(net: &Network, bag: &Bag) -> Dd {
    let embedded: Vec<Vec<Dd>> = bag
        .instances()
        .map(|inst| {
            let mut v: Vec<Dd> = match net.standardizer() {
                Some(s) => inst
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| (Dd::from_f64(x) - Dd::from_f64(s.mean[j])) / Dd::from_f64(s.scale[j]))
                    .collect(),
                None => inst.iter().map(|&x| Dd::from_f64(x)).collect(),
            };
            for layer in net.pre_layers() {
                v = dense(layer, &v);
            }
            v
        })
        .collect();

    let n = Dd::from_f64(embedded.len() as f64);
    let m = net.pooled_dim();
    let mut pooled: Vec<Dd> = (0..m)
        .map(|j| {
            let column = embedded.iter().map(|v| v[j]);
            match net.pool() {
                PoolKind::Mean => column.fold(Dd::ZERO, |a, b| a + b) / n,
                PoolKind::Max => column.reduce(Dd::max).expect("non-empty bag"),
                PoolKind::SmoothMax => column.fold(Dd::ZERO, |a, b| a + b.exp()).ln() / n,
            }
        })
        .collect();
    for layer in net.post_layers() {
        pooled = dense(layer, &pooled);
    }
    pooled[0]
}
