use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use super::layer::{Activation, Layer, LayerGrad};
use super::pooling::{pool_backward_flat, pool_flat, PoolKind};
use crate::data::{Bag, Standardizer};
use crate::error::{Error, Result};
use crate::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchKind {
    /// Pooling inside the network: instances are embedded into `R^m`, pooled, then classified.
    Proposed,
    /// Instance-level network whose scalar output is max-pooled, with nothing after the pool.
    PriorNn,
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            ArchKind::Proposed => "proposed",
            ArchKind::PriorNn => "prior-nn",
        })
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(ArchKind::Proposed),
            "prior-nn" | "priornn" => Ok(ArchKind::PriorNn),
            other => Err(Error::config(format!("unknown architecture `{other}`"))),
        }
    }
}

/// For `Proposed`, `embed_dim` is the pooled dimension `m`. For `PriorNn` it is the
/// width of the ReLU layer feeding the single linear output unit that gets pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: ArchKind,
    pub input_dim: usize,
    pub embed_dim: usize,
}

impl Architecture {
    pub fn proposed(input_dim: usize, embed_dim: usize) -> Architecture {
        Architecture {
            kind: ArchKind::Proposed,
            input_dim,
            embed_dim,
        }
    }

    pub fn prior_nn(input_dim: usize, hidden: usize) -> Architecture {
        Architecture {
            kind: ArchKind::PriorNn,
            input_dim,
            embed_dim: hidden,
        }
    }

    pub fn validate(&self, pool: PoolKind) -> Result<()> {
        if self.input_dim == 0 || self.embed_dim == 0 {
            return Err(Error::config("input and embedding dimensions must be positive"));
        }
        if self.kind == ArchKind::PriorNn && pool != PoolKind::Max {
            return Err(Error::config(format!(
                "prior-nn architecture requires max pooling, got {pool}"
            )));
        }
        Ok(())
    }
}

/// A bag classifier: per-instance layers, a pooling step, and post-pool layers
/// ending in a single scalar score.
///
/// The first pre-pool layer's rows play the role of the learned dictionary: each
/// row is one projection whose pooled response is one embedded coordinate.
#[derive(Debug, Clone)]
pub struct Network {
    architecture: Architecture,
    pool: PoolKind,
    pre: Vec<Layer>,
    post: Vec<Layer>,
    standardizer: Option<Standardizer>,
    // renewed on every mutation; clones share it since their parameters agree
    generation: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.architecture == other.architecture
            && self.pool == other.pool
            && self.pre == other.pre
            && self.post == other.post
            && self.standardizer == other.standardizer
    }
}

fn next_generation() -> u64 {
    static COUNTER: AtomicU64 = AtomicU64::new(1);
    COUNTER.fetch_add(1, AtomicOrdering::Relaxed)
}

impl Network {
    pub fn new(
        architecture: Architecture,
        pool: PoolKind,
        pre: Vec<Layer>,
        post: Vec<Layer>,
    ) -> Result<Network> {
        architecture.validate(pool)?;
        if pre.is_empty() {
            return Err(Error::ShapeMismatch("at least one pre-pool layer is required".into()));
        }
        let mut width = architecture.input_dim;
        for (i, layer) in pre.iter().chain(&post).enumerate() {
            if layer.cols != width {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i} expects input of {} but receives {width}",
                    layer.cols
                )));
            }
            if layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
                return Err(Error::ShapeMismatch(format!("layer {i} has inconsistent buffers")));
            }
            width = layer.rows;
        }
        if width != 1 {
            return Err(Error::ShapeMismatch(format!(
                "network must end in one scalar output, ends in {width}"
            )));
        }
        let pooled = pre.last().map(|l| l.rows).unwrap_or(0);
        match architecture.kind {
            ArchKind::Proposed if pooled != architecture.embed_dim => {
                return Err(Error::ShapeMismatch(format!(
                    "pooled dimension {pooled} differs from embedding dimension {}",
                    architecture.embed_dim
                )))
            }
            ArchKind::PriorNn if !post.is_empty() || pooled != 1 => {
                return Err(Error::ShapeMismatch(
                    "prior-nn pools the scalar instance output and has no post-pool layers".into(),
                ))
            }
            _ => {}
        }
        Ok(Network {
            architecture,
            pool,
            pre,
            post,
            standardizer: None,
            generation: next_generation(),
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn pool(&self) -> PoolKind {
        self.pool
    }

    pub fn input_dim(&self) -> usize {
        self.architecture.input_dim
    }

    pub fn pooled_dim(&self) -> usize {
        self.pre.last().map_or(0, |l| l.rows)
    }

    pub fn pre_layers(&self) -> &[Layer] {
        &self.pre
    }

    pub fn post_layers(&self) -> &[Layer] {
        &self.post
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.pre.iter().chain(&self.post)
    }


    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    /// Attaches an input transform applied to every instance before the first layer.
    pub fn with_standardizer(mut self, standardizer: Option<Standardizer>) -> Result<Network> {
        if let Some(s) = &standardizer {
            s.validate()?;
            if s.dim() != self.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim(),
                    got: s.dim(),
                });
            }
        }
        self.standardizer = standardizer;
        self.generation = next_generation();
        Ok(self)
    }

    pub fn with_pool(mut self, pool: PoolKind) -> Result<Network> {
        self.architecture.validate(pool)?;
        self.pool = pool;
        self.generation = next_generation();
        Ok(self)
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Layer::param_count).sum()
    }

    /// All parameters, layer by layer (pre then post), weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        self.generation = next_generation();
        let mut rest = params;
        for l in self.pre.iter_mut().chain(self.post.iter_mut()) {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.bias.len());
            l.bias.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    /// `true` for weight-matrix entries, `false` for biases, aligned with [`Network::params`].
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            out.extend(std::iter::repeat_n(true, l.weights.len()));
            out.extend(std::iter::repeat_n(false, l.bias.len()));
        }
        out
    }

    /// Sum of absolute weight-matrix entries (biases excluded).
    pub fn weight_l1(&self) -> f64 {
        self.layers()
            .flat_map(|l| l.weights.iter())
            .map(|w| w.abs())
            .sum()
    }

    pub fn forward_bag(&self, bag: &Bag) -> Result<(f64, ForwardTrace)> {
        forward_bag(self, bag)
    }

    pub fn score(&self, bag: &Bag) -> Result<f64> {
        forward_bag(self, bag).map(|(s, _)| s)
    }

    pub fn backward_bag(&self, trace: &ForwardTrace, dscore: f64) -> Result<Gradients> {
        backward_bag(self, trace, dscore)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            pre: self.pre.iter().map(LayerGrad::zeros_like).collect(),
            post: self.post.iter().map(LayerGrad::zeros_like).collect(),
        }
    }
}

/// He-normal initialization of the architecture's standard layer stack.
///
/// * proposed: `d -> m` ReLU, pool, `m -> 1` linear.
/// * prior-nn: `d -> m` ReLU, `m -> 1` linear, max pool.
pub fn init_network(architecture: Architecture, pool: PoolKind, seed: u64) -> Result<Network> {
    architecture.validate(pool)?;
    let mut rng = rng(seed);
    let (d, m) = (architecture.input_dim, architecture.embed_dim);
    let hidden = Layer::he_normal(m, d, Activation::Relu, &mut rng);
    let output = Layer::he_normal(1, m, Activation::Linear, &mut rng);
    match architecture.kind {
        ArchKind::Proposed => Network::new(architecture, pool, vec![hidden], vec![output]),
        ArchKind::PriorNn => Network::new(architecture, pool, vec![hidden, output], vec![]),
    }
}

/// Intermediate values of one bag's forward pass, kept for back-propagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    generation: u64,
    n: usize,
    /// Standardized inputs, `n x d`.
    input: Vec<f64>,
    /// Per pre-pool layer, `n x rows` buffers.
    pre_z: Vec<Vec<f64>>,
    pre_a: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    post_z: Vec<Vec<f64>>,
    post_a: Vec<Vec<f64>>,
    score: f64,
}

impl ForwardTrace {
    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn instances(&self) -> usize {
        self.n
    }

    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    /// Max pooling only: lowest instance index attaining each pooled coordinate.
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }

    /// Pre-activations of pre-pool layer `layer` for instance `i`.
    pub fn pre_activation(&self, layer: usize, i: usize) -> &[f64] {
        let rows = self.pre_z[layer].len() / self.n;
        &self.pre_z[layer][i * rows..(i + 1) * rows]
    }

    pub fn embedding(&self, i: usize) -> &[f64] {
        let last = self.pre_a.last().expect("at least one pre-pool layer");
        let m = last.len() / self.n;
        &last[i * m..(i + 1) * m]
    }

    pub fn post_activations(&self) -> &[Vec<f64>] {
        &self.post_a
    }
}

pub fn forward_bag(net: &Network, bag: &Bag) -> Result<(f64, ForwardTrace)> {
    let mut trace = ForwardTrace::empty();
    let score = forward_reuse(net, bag, &mut trace, &mut Vec::new())?;
    Ok((score, trace))
}

// Sizes a reusable buffer; callers overwrite every element.
fn reset(buf: &mut Vec<f64>, len: usize) {
    buf.resize(len, 0.0);
}

fn reset_stack(stack: &mut Vec<Vec<f64>>, depth: usize) {
    stack.truncate(depth);
    stack.resize_with(depth, Vec::new);
}

impl ForwardTrace {
    pub(crate) fn empty() -> ForwardTrace {
        ForwardTrace {
            generation: 0,
            n: 0,
            input: Vec::new(),
            pre_z: Vec::new(),
            pre_a: Vec::new(),
            pooled: Vec::new(),
            argmax: Vec::new(),
            post_z: Vec::new(),
            post_a: Vec::new(),
            score: f64::NAN,
        }
    }
}

/// Forward pass writing into an existing trace, reusing its buffers.
pub(crate) fn forward_reuse(
    net: &Network,
    bag: &Bag,
    trace: &mut ForwardTrace,
    scratch: &mut Vec<i64>,
) -> Result<f64> {
    let d = net.input_dim();
    if bag.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bag.dim(),
        });
    }
    let n = bag.len();
    if n == 0 {
        return Err(Error::EmptyBag);
    }
    trace.generation = 0;
    trace.n = n;
    match &net.standardizer {
        Some(s) => {
            reset(&mut trace.input, n * d);
            for (inst, out) in bag.instances().zip(trace.input.chunks_exact_mut(d)) {
                s.transform_instance(inst, out);
            }
        }
        None => {
            trace.input.clear();
            trace.input.extend_from_slice(bag.features());
        }
    }

    reset_stack(&mut trace.pre_z, net.pre.len());
    reset_stack(&mut trace.pre_a, net.pre.len());
    for (k, layer) in net.pre.iter().enumerate() {
        let (done, rest) = trace.pre_a.split_at_mut(k);
        let src = done.last().unwrap_or(&trace.input);
        let (z, a) = (&mut trace.pre_z[k], &mut rest[0]);
        reset(z, n * layer.rows);
        reset(a, n * layer.rows);
        for i in 0..n {
            layer.forward_into(
                &src[i * layer.cols..(i + 1) * layer.cols],
                &mut z[i * layer.rows..(i + 1) * layer.rows],
                &mut a[i * layer.rows..(i + 1) * layer.rows],
            );
        }
    }

    let m = net.pooled_dim();
    reset(&mut trace.pooled, m);
    trace.argmax.clear();
    trace.argmax.resize(m, 0);
    pool_flat(
        trace.pre_a.last().expect("validated non-empty"),
        n,
        m,
        net.pool,
        &mut trace.pooled,
        &mut trace.argmax,
        scratch,
    );

    reset_stack(&mut trace.post_z, net.post.len());
    reset_stack(&mut trace.post_a, net.post.len());
    for (k, layer) in net.post.iter().enumerate() {
        let (done, rest) = trace.post_a.split_at_mut(k);
        let src = done.last().unwrap_or(&trace.pooled);
        let (z, a) = (&mut trace.post_z[k], &mut rest[0]);
        reset(z, layer.rows);
        reset(a, layer.rows);
        layer.forward_into(src, z, a);
    }
    let score = trace.post_a.last().unwrap_or(&trace.pooled)[0];
    trace.score = score;
    trace.generation = net.generation;
    Ok(score)
}

/// Gradient of `dscore * score` with respect to every parameter.
pub fn backward_bag(net: &Network, trace: &ForwardTrace, dscore: f64) -> Result<Gradients> {
    let mut grads = net.zero_gradients();
    backward_reuse(net, trace, dscore, &mut grads, &mut BackwardScratch::default())?;
    Ok(grads)
}

#[derive(Debug, Default)]
pub(crate) struct BackwardScratch {
    upstream: Vec<f64>,
    dinput: Vec<f64>,
    dembedded: Vec<f64>,
    da: Vec<f64>,
    dnext: Vec<f64>,
    sort: Vec<i64>,
}

/// Overwrites `grads` (which must match the network's shape) with the gradient
/// of `dscore * score`.
pub(crate) fn backward_reuse(
    net: &Network,
    trace: &ForwardTrace,
    dscore: f64,
    grads: &mut Gradients,
    scratch: &mut BackwardScratch,
) -> Result<()> {
    if trace.generation != net.generation {
        return Err(Error::StaleTrace);
    }
    grads.values_mut().for_each(|v| *v = 0.0);
    if dscore == 0.0 {
        return Ok(());
    }
    let n = trace.n;
    let BackwardScratch {
        upstream,
        dinput,
        dembedded,
        da,
        dnext,
        sort,
    } = scratch;

    // post-pool stack, from the scalar output back to the pooled vector
    upstream.clear();
    upstream.push(dscore);
    for (k, layer) in net.post.iter().enumerate().rev() {
        let input = if k == 0 { &trace.pooled } else { &trace.post_a[k - 1] };
        reset(dinput, layer.cols);
        layer.backward_into(input, &trace.post_z[k], upstream, &mut grads.post[k], Some(dinput));
        std::mem::swap(upstream, dinput);
    }

    let m = net.pooled_dim();
    let embedded = trace.pre_a.last().expect("validated non-empty");
    reset(dembedded, n * m);
    pool_backward_flat(embedded, n, m, net.pool, &trace.argmax, upstream, dembedded, sort);

    let depth = net.pre.len();
    let widest = net.pre.iter().map(|l| l.cols.max(l.rows)).max().unwrap_or(0);
    reset(da, widest);
    reset(dnext, widest);
    for i in 0..n {
        let start = &dembedded[i * m..(i + 1) * m];
        if start.iter().all(|&g| g == 0.0) {
            continue;
        }
        da[..m].copy_from_slice(start);
        for k in (0..depth).rev() {
            let layer = &net.pre[k];
            let input = if k == 0 {
                &trace.input[i * layer.cols..(i + 1) * layer.cols]
            } else {
                &trace.pre_a[k - 1][i * layer.cols..(i + 1) * layer.cols]
            };
            let z = &trace.pre_z[k][i * layer.rows..(i + 1) * layer.rows];
            let dinput = if k > 0 { Some(&mut dnext[..layer.cols]) } else { None };
            layer.backward_into(input, z, &da[..layer.rows], &mut grads.pre[k], dinput);
            if k > 0 {
                da[..layer.cols].copy_from_slice(&dnext[..layer.cols]);
            }
        }
    }
    Ok(())
}

/// Parameter gradients, shape-congruent with the network they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub pre: Vec<LayerGrad>,
    pub post: Vec<LayerGrad>,
}

impl Gradients {
    /// Flattened in the same order as [`Network::params`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in self.pre.iter().chain(&self.post) {
            out.extend_from_slice(&g.weights);
            out.extend_from_slice(&g.bias);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pre
            .iter()
            .chain(&self.post)
            .map(|g| g.weights.len() + g.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.pre
            .iter_mut()
            .chain(self.post.iter_mut())
            .flat_map(|g| g.weights.iter_mut().chain(g.bias.iter_mut()))
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.pre
            .iter()
            .chain(&self.post)
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()))
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch("gradient sizes differ".into()));
        }
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn divide(&mut self, divisor: f64) {
        self.values_mut().for_each(|v| *v /= divisor);
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|&v| v == 0.0)
    }
}
