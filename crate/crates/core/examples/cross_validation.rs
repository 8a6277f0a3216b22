//! Repeated stratified cross-validation with an inner grid search, on a small
//! distribution-shift problem. The split plan is saved so the run can be
//! reproduced exactly.
//!
//! `cargo run --release --example cross_validation -- [plan.csv]`

use milnet::data::{generate_synthetic, make_splits, SynthSpec};
use milnet::evaluation::{cross_validate, EvalConfig, Grid, ModelSpec};
use milnet::network::{ArchKind, PoolKind};
use milnet::training::TrainConfig;

fn main() -> milnet::Result<()> {
    let data = generate_synthetic(&SynthSpec::distribution_shift(4, 30, 3))?;
    let plan = make_splits(&data, 5, 2, 11)?;
    if let Some(path) = std::env::args().nth(1) {
        plan.save(&path)?;
        println!("split plan written to {path}");
    }

    let grid = Grid {
        m_values: vec![2, 8],
        lambda_values: vec![1e-5, 1e-3],
    };
    let config = EvalConfig {
        model: ModelSpec {
            kind: ArchKind::Proposed,
            pool: PoolKind::Mean,
        },
        train: TrainConfig {
            max_iterations: 1500,
            ..TrainConfig::default()
        },
        inner_folds: 3,
        seed: 11,
        jobs: 1,
    };
    let report = cross_validate(&data, &plan, &grid, &config)?;
    print!("{}", report.to_csv());
    println!(
        "{} folds: mean train EER {:.4}, mean test EER {:.4}",
        report.records.len(),
        report.mean_train_eer,
        report.mean_test_eer
    );
    Ok(())
}
