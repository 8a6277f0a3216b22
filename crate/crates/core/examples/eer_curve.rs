//! ROC operating points and equal error rate for a handful of scored bags.
//!
//! `cargo run --example eer_curve`

use milnet::data::Label;
use milnet::evaluation::{eer, roc_points, ScoredBag};

fn main() -> milnet::Result<()> {
    let raw = [
        ("a", 1, 0.92),
        ("b", 1, 0.71),
        ("c", -1, 0.64),
        ("d", 1, 0.50),
        ("e", -1, 0.50),
        ("f", -1, 0.33),
        ("g", 1, 0.20),
        ("h", -1, 0.05),
    ];
    let scored: Vec<ScoredBag> = raw
        .iter()
        .map(|&(id, l, s)| ScoredBag::new(id, Label::from_int(l).expect("label is +1 or -1"), s))
        .collect();

    println!("{:>6} {:>6}", "FPR", "TPR");
    for (fpr, tpr) in roc_points(&scored)? {
        println!("{fpr:>6.3} {tpr:>6.3}");
    }
    println!("EER = {:.4}", eer(&scored)?);

    // only the ranking matters
    let squashed: Vec<ScoredBag> = scored
        .iter()
        .map(|b| ScoredBag::new(b.id.clone(), b.label, 1.0 / (1.0 + (-10.0 * b.score).exp())))
        .collect();
    println!("EER after a sigmoid: {:.4}", eer(&squashed)?);
    Ok(())
}
