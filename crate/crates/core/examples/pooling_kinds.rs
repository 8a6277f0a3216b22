//! Pool the same embedded bag three ways and show how each one responds to
//! duplicated instances and to a single outlier.
//!
//! `cargo run --example pooling_kinds`

use milnet::network::{pool_backward, pool_forward, PoolKind};

fn show(label: &str, rows: &[Vec<f64>]) -> milnet::Result<()> {
    println!("{label}");
    for pool in PoolKind::ALL {
        let pooled = pool_forward(rows, pool)?;
        println!("  {pool:>10}: {pooled:.4?}");
    }
    Ok(())
}

fn main() -> milnet::Result<()> {
    let bag = vec![vec![0.2, 1.0], vec![0.4, 0.0], vec![0.6, 0.5]];
    show("three instances", &bag)?;

    let doubled: Vec<Vec<f64>> = bag.iter().chain(&bag).cloned().collect();
    show("same bag, every instance twice (mean unchanged)", &doubled)?;

    let mut outlier = bag.clone();
    outlier.push(vec![5.0, 0.0]);
    show("plus one outlier in the first unit", &outlier)?;

    // upstream gradient of one on each pooled unit
    for pool in PoolKind::ALL {
        let grads = pool_backward(&bag, pool, &[1.0, 1.0])?;
        println!("d pooled / d instance, {pool}: {grads:.4?}");
    }
    Ok(())
}
