//! Finite-difference check of back-propagation through every pooling kind.
//!
//! `cargo run --example gradient_check -- [trials]`

use milnet::gradcheck::{run_gradcheck, GradCheckOptions};
use milnet::network::PoolKind;

fn main() -> milnet::Result<()> {
    let trials = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100);
    for pool in PoolKind::ALL {
        let opts = GradCheckOptions {
            trials,
            pool: Some(pool),
            ..GradCheckOptions::default()
        };
        let s = run_gradcheck(&opts)?;
        println!(
            "{pool:>10}: {} cases, {} compared, {} excluded, {} negligible, max rel error {:.3e} -> {}",
            s.cases,
            s.compared,
            s.excluded,
            s.negligible,
            s.max_rel_error,
            if s.passed(opts.tolerance) { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
