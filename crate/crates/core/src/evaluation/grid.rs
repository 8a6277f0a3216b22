use rayon::prelude::*;
use serde::Serialize;

use super::roc::{eer, ScoredBag};
use crate::data::{make_splits, MilDataset};
use crate::error::{Error, Result};
use crate::network::{init_network, ArchKind, Architecture, Network, PoolKind};
use crate::seed::derive_seed;
use crate::training::{train, TrainConfig};

/// Architecture family and pooling shared by every model an evaluation trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ArchKind,
    pub pool: PoolKind,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ArchKind::Proposed,
            pool: PoolKind::Mean,
        }
    }
}

impl ModelSpec {
    pub fn architecture(&self, input_dim: usize, m: usize) -> Architecture {
        Architecture {
            kind: self.kind,
            input_dim,
            embed_dim: m,
        }
    }

    pub fn init(&self, input_dim: usize, m: usize, seed: u64) -> Result<Network> {
        init_network(self.architecture(input_dim, m), self.pool, seed)
    }
}

/// Hyper-parameter grid over embedding size `m` and L1 strength `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub m_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            m_values: vec![2, 4, 8, 12, 16, 20],
            lambda_values: vec![1e-7, 1e-6, 1e-5, 1e-4, 1e-3],
        }
    }
}

impl Grid {
    pub fn single(m: usize, lambda: f64) -> Grid {
        Grid {
            m_values: vec![m],
            lambda_values: vec![lambda],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() || self.lambda_values.is_empty() {
            return Err(Error::config("grid lists must be non-empty"));
        }
        if self.m_values.contains(&0) {
            return Err(Error::config("grid m values must be positive"));
        }
        if self.lambda_values.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::config("grid lambda values must be non-negative"));
        }
        Ok(())
    }

    /// Cells in row-major order: `m` outer, `lambda` inner.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.m_values
            .iter()
            .flat_map(|&m| self.lambda_values.iter().map(move |&l| (m, l)))
            .collect()
    }
}

/// Settings shared by grid search and cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub model: ModelSpec,
    /// Training template; `lambda` is overridden per grid cell.
    pub train: TrainConfig,
    pub inner_folds: usize,
    pub seed: u64,
    /// Concurrent training tasks; 1 runs everything serially.
    pub jobs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            inner_folds: 5,
            seed: 0,
            jobs: 1,
        }
    }
}

impl EvalConfig {
    pub(crate) fn run<T: Send, F>(&self, tasks: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.jobs <= 1 {
            return (0..tasks).map(f).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build() {
            Ok(pool) => pool.install(|| (0..tasks).into_par_iter().map(&f).collect()),
            Err(_) => (0..tasks).map(f).collect(),
        }
    }
}

/// Trains one model with hyper-parameters `(m, lambda)` and a derived seed.
pub fn fit_model(
    train_set: &MilDataset,
    m: usize,
    lambda: f64,
    config: &EvalConfig,
    seed: u64,
) -> Result<Network> {
    let net = config.model.init(train_set.dim(), m, derive_seed(seed, &[0x1417]))?;
    let tc = TrainConfig {
        lambda,
        seed: derive_seed(seed, &[0x7EA1]),
        ..config.train.clone()
    };
    train(&net, train_set, &tc).map(|(net, _)| net)
}

pub fn score_dataset(net: &Network, dataset: &MilDataset) -> Result<Vec<ScoredBag>> {
    dataset
        .bags()
        .iter()
        .map(|b| Ok(ScoredBag::new(b.id(), b.label(), net.score(b)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub m: usize,
    pub lambda: f64,
    pub fold_eers: Vec<f64>,
    pub mean_eer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub m: usize,
    pub lambda: f64,
    pub cells: Vec<CellResult>,
}

/// Picks `(m, lambda)` by mean validation EER under stratified `inner_folds`-fold
/// cross-validation of `train_set`.
///
/// Every cell sees the same inner split. Ties go to the smaller `m`, then the
/// larger `lambda`.
pub fn grid_search(
    train_set: &MilDataset,
    grid: &Grid,
    inner_folds: usize,
    config: &EvalConfig,
    seed: u64,
) -> Result<GridSearchResult> {
    grid.validate()?;
    let plan = make_splits(train_set, inner_folds, 1, derive_seed(seed, &[u64::MAX]))?;
    let cells = grid.cells();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..inner_folds).map(move |f| (c, f)))
        .collect();

    let eers = config.run(tasks.len(), |t| -> Result<f64> {
        let (c, f) = tasks[t];
        let (m, lambda) = cells[c];
        let (tr, va) = plan.partition(train_set, 0, f)?;
        let inner_train = train_set.subset(&tr)?;
        let validation = train_set.subset(&va)?;
        let net = fit_model(&inner_train, m, lambda, config, derive_seed(seed, &[c as u64, f as u64]))?;
        eer(&score_dataset(&net, &validation)?)
    });
    let eers = eers.into_iter().collect::<Result<Vec<f64>>>()?;

    let results: Vec<CellResult> = cells
        .iter()
        .enumerate()
        .map(|(c, &(m, lambda))| {
            let fold_eers = eers[c * inner_folds..(c + 1) * inner_folds].to_vec();
            let mean_eer = fold_eers.iter().sum::<f64>() / inner_folds as f64;
            CellResult {
                m,
                lambda,
                fold_eers,
                mean_eer,
            }
        })
        .collect();
    let best = select_best(&results);
    Ok(GridSearchResult {
        m: best.m,
        lambda: best.lambda,
        cells: results,
    })
}

/// Lowest mean EER; ties broken by smaller `m`, then larger `lambda`.
pub fn select_best(cells: &[CellResult]) -> &CellResult {
    cells
        .iter()
        .min_by(|a, b| {
            a.mean_eer
                .total_cmp(&b.mean_eer)
                .then(a.m.cmp(&b.m))
                .then(b.lambda.total_cmp(&a.lambda))
        })
        .expect("grid is non-empty")
}
