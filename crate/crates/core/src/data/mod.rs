//! Bags, datasets, CSV ingestion, standardization, split plans and synthetic generators.

mod bag;
mod csv_io;
mod split;
mod standardize;
mod synth;

pub use bag::{Bag, Label, MilDataset};
pub use csv_io::{load_dataset, read_dataset, write_dataset, write_dataset_to};
pub use split::{make_splits, SplitPlan};
pub use standardize::{apply_standardizer, fit_standardizer, Standardizer, SCALE_FLOOR};
pub use synth::{
    generate_synthetic, generate_synthetic_with_meta, BagMeta, Regime, SynthDataset, SynthSpec,
    SHIFT_NEGATIVE_P, SHIFT_POSITIVE_P,
};
