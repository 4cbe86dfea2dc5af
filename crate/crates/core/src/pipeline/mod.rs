//! Cross-validated experiment harness: every preprocessor feeding every
//! classifier, with accuracy and training-time reports.
//!
//! In the default global mode each preprocessor is fitted once on the whole
//! table before cross-validation; `strict = true` refits it on every
//! training fold. Classifier inputs are always standardized with training
//! fold statistics, and training time is the CPU time of the training call.
//!
//! Seeds derive from the experiment seed through [`crate::rng::derive_seed`]:
//! `[0, k]` plans the folds, `[1, classifier, fold]` seeds a classifier run,
//! `[2, preprocessor, fold]` seeds a reducer fit (fold `u64::MAX` for the
//! global fit).

mod clock;
mod config;
mod harness;
mod report;

pub use config::{
    Classifier, DataConfig, ExperimentConfig, FoldConfig, GranularConfig, PcaConfig, Preprocessor, SourceKind,
};
pub use harness::{
    fit_preprocessor, fold_plan, fold_preprocessor, run_cell, run_folds, run_matrix, FittedPreprocessor, FoldOutcome,
};
pub use report::{emit_report, table_row, CellReport, CellStatus, ExperimentReport, ReportFormat};
