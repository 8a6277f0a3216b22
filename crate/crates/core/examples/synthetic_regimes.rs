//! Generate both synthetic regimes, describe what distinguishes the classes,
//! and write one of them out as CSV.
//!
//! `cargo run --example synthetic_regimes -- [out.csv]`

use milnet::data::{generate_synthetic_with_meta, write_dataset, Label, SynthSpec};

fn main() -> milnet::Result<()> {
    let witness = generate_synthetic_with_meta(&SynthSpec::witness(3, 50, 1))?;
    let shift = generate_synthetic_with_meta(&SynthSpec::distribution_shift(3, 50, 1))?;

    println!("witness regime, direction {:.3?}", witness.direction);
    for (bag, meta) in witness.dataset.bags().iter().zip(&witness.meta).take(6) {
        println!("  {:>6} {:+} {:>2} instances, witnesses at {:?}", bag.id(), bag.label().as_i8(), bag.len(), meta.witnesses);
    }

    println!("distribution-shift regime");
    for label in [Label::Positive, Label::Negative] {
        let fractions: Vec<f64> = shift
            .dataset
            .bags()
            .iter()
            .zip(&shift.meta)
            .filter(|(b, _)| b.label() == label)
            .map(|(_, m)| m.component_a_fraction())
            .collect();
        let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
        println!("  label {:+}: mean component-A fraction {mean:.3} over {} bags", label.as_i8(), fractions.len());
    }

    if let Some(path) = std::env::args().nth(1) {
        write_dataset(&path, &shift.dataset)?;
        println!("wrote {path}");
    }
    Ok(())
}
