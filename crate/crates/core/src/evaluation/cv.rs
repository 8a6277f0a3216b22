use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::grid::{fit_model, grid_search, score_dataset, EvalConfig, Grid};
use super::roc::eer;
use crate::data::{MilDataset, SplitPlan};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRecord {
    pub repetition: usize,
    pub fold: usize,
    pub m: usize,
    pub lambda: f64,
    pub train_eer: f64,
    pub test_eer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub records: Vec<FoldRecord>,
    pub mean_train_eer: f64,
    pub mean_test_eer: f64,
}

impl EvalReport {
    pub fn from_records(records: Vec<FoldRecord>) -> EvalReport {
        let n = records.len().max(1) as f64;
        let mean_train_eer = records.iter().map(|r| r.train_eer).sum::<f64>() / n;
        let mean_test_eer = records.iter().map(|r| r.test_eer).sum::<f64>() / n;
        EvalReport {
            records,
            mean_train_eer,
            mean_test_eer,
        }
    }

    /// `repetition,fold,m,lambda,train_eer,test_eer` rows followed by a
    /// `mean,,,,<train>,<test>` summary row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("repetition,fold,m,lambda,train_eer,test_eer\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{:e},{},{}",
                r.repetition, r.fold, r.m, r.lambda, r.train_eer, r.test_eer
            );
        }
        let _ = writeln!(s, "mean,,,,{},{}", self.mean_train_eer, self.mean_test_eer);
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `<path>` as CSV and `<path>` with a `.json` extension alongside it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))?;
        let json = path.with_extension("json");
        fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))
    }
}

/// Outer cross-validation: for each `(repetition, fold)` of `plan`, select
/// `(m, lambda)` by inner grid search on the training portion, retrain on the whole
/// training portion and record train and held-out EER.
///
/// Portions are ordered by bag id, so results do not depend on the order of bags
/// in `dataset`. Standardization (when enabled in the training template) is fit
/// on each training portion only.
pub fn cross_validate(
    dataset: &MilDataset,
    plan: &SplitPlan,
    grid: &Grid,
    config: &EvalConfig,
) -> Result<EvalReport> {
    grid.validate()?;
    if plan.bag_ids().count() != dataset.len() {
        return Err(Error::PlanMismatch(format!(
            "plan covers {} bags, dataset has {}",
            plan.bag_ids().count(),
            dataset.len()
        )));
    }
    let mut records = Vec::with_capacity(plan.repeats() * plan.folds());
    for repetition in 0..plan.repeats() {
        for fold in 0..plan.folds() {
            let (mut tr, mut te) = plan.partition(dataset, repetition, fold)?;
            let by_id = |i: &usize| dataset.bags()[*i].id().to_string();
            tr.sort_by_key(by_id);
            te.sort_by_key(by_id);
            if te.is_empty() {
                return Err(Error::PlanMismatch(format!(
                    "repetition {repetition} fold {fold} holds no bags"
                )));
            }
            let train_set = dataset.subset(&tr)?;
            let test_set = dataset.subset(&te)?;

            let seed = derive_seed(config.seed, &[repetition as u64, fold as u64]);
            let chosen = grid_search(&train_set, grid, config.inner_folds, config, seed)?;
            let net = fit_model(&train_set, chosen.m, chosen.lambda, config, derive_seed(seed, &[u64::MAX - 1]))?;
            records.push(FoldRecord {
                repetition,
                fold,
                m: chosen.m,
                lambda: chosen.lambda,
                train_eer: eer(&score_dataset(&net, &train_set)?)?,
                test_eer: eer(&score_dataset(&net, &test_set)?)?,
            });
        }
    }
    Ok(EvalReport::from_records(records))
}
