//! A prior-nn network (per-instance scorer, max over instances) is the proposed
//! architecture with a one-unit embedding, max pooling and nothing after the pool.
//! Build both from the same weights and compare scores bit for bit.
//!
//! `cargo run --example prior_equivalence`

use milnet::network::{equivalence_check, init_network, probe_bags, Architecture, PoolKind};

fn main() -> milnet::Result<()> {
    let prior = init_network(Architecture::prior_nn(4, 6), PoolKind::Max, 21)?;
    let proposed = prior.as_special_case()?;
    println!(
        "prior-nn: {} parameters; proposed counterpart: m = {}, {} pooling",
        prior.param_count(),
        proposed.pooled_dim(),
        proposed.pool()
    );
    for bag in probe_bags(4).iter().take(5) {
        let (a, b) = (prior.score(bag)?, proposed.score(bag)?);
        println!("  {:>8} ({} instances): {a:+.6} {b:+.6}", bag.id(), bag.len());
    }
    println!("identical on all probe bags: {}", equivalence_check(&prior, &proposed)?);
    Ok(())
}
