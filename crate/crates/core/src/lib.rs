//! Attribute reduction and bi-class fault detection for dissolved gas-in-oil
//! analysis (DGA) of transformer bushings.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dataset`] ingests, validates, standardizes and discretizes gas tables,
//!   plans stratified folds and synthesizes seeded tables.
//! * Four reducers pick the attributes (or projection) a classifier sees:
//!   [`pca`], [`roughset`], [`granular`] and [`dtree`].
//! * Three classifiers consume the reduced data: [`bpnn`], [`svm`] and the
//!   rough neural network in [`rnn`].
//! * [`pipeline`] wires reducers and classifiers into a cross-validated
//!   experiment matrix and renders reports.

pub mod bpnn;
pub mod dataset;
pub mod dtree;
mod error;
pub mod granular;
mod layers;
pub mod pca;
pub mod pipeline;
pub mod reduction;
pub mod rng;
pub mod roughset;
pub mod rnn;
pub mod samples;
pub mod svm;
mod train;

pub use dataset::{CategoricalTable, FoldPlan, Gas, GasTable, FAULTY, GAS_COUNT, HEALTHY};
pub use error::{Error, Result};
pub use reduction::{Diagnostics, ReductionMethod, ReductionResult};
pub use samples::{IntervalSamples, Samples, Scaler};
pub use train::{evaluate_predictions, Confusion, EpochRecord, Evaluation, MlpConfig, SplitRatios, StopReason, TrainingTrace};
