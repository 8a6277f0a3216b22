//! Equal error rate, inner grid search and the outer cross-validation protocol.

mod cv;
mod grid;
mod roc;

pub use cv::{cross_validate, EvalReport, FoldRecord};
pub use grid::{
    fit_model, grid_search, score_dataset, select_best, CellResult, EvalConfig, Grid,
    GridSearchResult, ModelSpec,
};
pub use roc::{eer, roc_points, ScoredBag};
