//! Train a max-pooling network on the witness synthetic problem and report
//! the objective trajectory and train/held-out EER.
//!
//! `cargo run --release --example witness_training`

use std::time::Instant;

use milnet::data::{generate_synthetic, SynthSpec};
use milnet::evaluation::{eer, score_dataset};
use milnet::network::{init_network, Architecture, PoolKind};
use milnet::training::{train, TrainConfig};

fn main() -> milnet::Result<()> {
    // one draw of the generator, so train and test share the witness direction
    let all = generate_synthetic(&SynthSpec::witness(5, 200, 1))?;
    let (even, odd): (Vec<usize>, Vec<usize>) = (0..all.len()).partition(|i| i % 2 == 0);
    let train_set = all.subset(&even)?;
    let test_set = all.subset(&odd)?;

    let net = init_network(Architecture::proposed(5, 8), PoolKind::Max, 7)?;
    let config = TrainConfig {
        lambda: 1e-5,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let (trained, report) = train(&net, &train_set, &config)?;
    println!("trained {} iterations in {:.2?}", report.iterations, start.elapsed());
    println!("objective: {:.4} -> {:.4}", report.initial_objective, report.final_objective);
    for c in report.checkpoints.iter().filter(|c| c.full_objective.is_some()) {
        println!("  iter {:>5}: full objective {:.4}", c.iteration, c.full_objective.unwrap_or_default());
    }
    println!("train EER: {:.4}", eer(&score_dataset(&trained, &train_set)?)?);
    println!("test  EER: {:.4}", eer(&score_dataset(&trained, &test_set)?)?);
    Ok(())
}
