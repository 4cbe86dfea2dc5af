//! Shared fixtures for the benchmarks.

use dga_core::dataset::{discretize, SynthSpec};
use dga_core::{CategoricalTable, Gas, GasTable, IntervalSamples, Samples, Scaler, GAS_COUNT};

pub const INFORMATIVE: [Gas; 3] = [Gas::Ethylene, Gas::Hydrogen, Gas::Methane];

pub fn table(rows: usize) -> GasTable {
    SynthSpec::new(rows, 0.5, 0.2, 17)
        .with_informative(&INFORMATIVE)
        .generate()
        .expect("synthetic table")
}

pub fn codes(rows: usize) -> CategoricalTable {
    discretize(&table(rows))
}

/// Standardized gas columns.
pub fn points(rows: usize) -> Samples {
    columns(rows, &(0..GAS_COUNT).collect::<Vec<_>>())
}

/// Standardized values of the chosen gas columns.
pub fn columns(rows: usize, gases: &[usize]) -> Samples {
    let raw = table(rows).select(gases);
    Scaler::fit(raw.rows()).and_then(|s| s.transform(&raw)).expect("scalable")
}

/// Points widened into boxes of half-width `spread`.
pub fn boxes(rows: usize, spread: f64) -> IntervalSamples {
    let p = points(rows);
    let lower = p.rows().iter().map(|r| r.iter().map(|v| v - spread).collect()).collect();
    let upper = p.rows().iter().map(|r| r.iter().map(|v| v + spread).collect()).collect();
    IntervalSamples::new(p.names().to_vec(), lower, upper, p.labels().to_vec()).expect("boxes")
}
