//! Gas tables: ingestion, validation, standardization, discretization,
//! fold planning and synthetic generation.
//!
//! A [`GasTable`] always carries exactly ten condition attributes in the
//! fixed [`Gas::ALL`] order plus a binary decision, `1` for a healthy
//! bushing and `0` for a faulty one.

mod csv_io;
mod discretize;
mod folds;
mod standardize;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::samples::Samples;
use crate::{Error, Result};

pub use csv_io::{format_sig9, load_csv, read_csv, write_categorical_csv, write_csv, LoadReport};
pub use discretize::{discretize, Discretizer, RANGE_BINNED};
pub use folds::{kfold, ratio_split, FoldPlan};
pub use standardize::standardize;
pub use synth::{synth_generate, SynthSpec};

/// Number of condition attributes in a gas table.
pub const GAS_COUNT: usize = 10;

/// Decision value of a healthy bushing.
pub const HEALTHY: u8 = 1;
/// Decision value of a faulty bushing.
pub const FAULTY: u8 = 0;

/// The ten condition attributes, in canonical column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gas {
    Acetylene,
    CarbonDioxide,
    CarbonMonoxide,
    Ethane,
    Ethylene,
    Hydrogen,
    Methane,
    Nitrogen,
    Oxygen,
    Tcg,
}

impl Gas {
    pub const ALL: [Gas; GAS_COUNT] = [
        Gas::Acetylene,
        Gas::CarbonDioxide,
        Gas::CarbonMonoxide,
        Gas::Ethane,
        Gas::Ethylene,
        Gas::Hydrogen,
        Gas::Methane,
        Gas::Nitrogen,
        Gas::Oxygen,
        Gas::Tcg,
    ];

    /// Gases summed into the total combustible gas column.
    pub const COMBUSTIBLE: [Gas; 6] = [
        Gas::Hydrogen,
        Gas::Methane,
        Gas::Acetylene,
        Gas::Ethylene,
        Gas::Ethane,
        Gas::CarbonMonoxide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gas::Acetylene => "acetylene",
            Gas::CarbonDioxide => "carbon_dioxide",
            Gas::CarbonMonoxide => "carbon_monoxide",
            Gas::Ethane => "ethane",
            Gas::Ethylene => "ethylene",
            Gas::Hydrogen => "hydrogen",
            Gas::Methane => "methane",
            Gas::Nitrogen => "nitrogen",
            Gas::Oxygen => "oxygen",
            Gas::Tcg => "tcg",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Gas> {
        let name = name.trim();
        Gas::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Gas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn gas_names() -> Vec<String> {
    Gas::ALL.iter().map(|g| g.name().to_string()).collect()
}

/// Continuous gas concentrations (ppm) with a binary decision column.
#[derive(Clone, Debug, PartialEq)]
pub struct GasTable {
    rows: Vec<[f64; GAS_COUNT]>,
    decisions: Vec<u8>,
}

impl GasTable {
    /// Builds a table, checking every value is finite and non-negative and
    /// every decision is `0` or `1`.
    pub fn new(rows: Vec<[f64; GAS_COUNT]>, decisions: Vec<u8>) -> Result<Self> {
        if rows.len() != decisions.len() {
            return Err(Error::Schema(format!(
                "{} rows but {} decisions",
                rows.len(),
                decisions.len()
            )));
        }
        for (i, (row, &d)) in rows.iter().zip(&decisions).enumerate() {
            if let Some(g) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Validation {
                    row: i,
                    message: format!("{} = {} is not a non-negative concentration", Gas::ALL[g], row[g]),
                });
            }
            if d > 1 {
                return Err(Error::Validation {
                    row: i,
                    message: format!("decision {d} is not 0 or 1"),
                });
            }
        }
        Ok(GasTable { rows, decisions })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[f64; GAS_COUNT]] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64; GAS_COUNT] {
        &self.rows[i]
    }

    pub fn decisions(&self) -> &[u8] {
        &self.decisions
    }

    pub fn value(&self, row: usize, gas: Gas) -> f64 {
        self.rows[row][gas.index()]
    }

    pub fn column(&self, gas: Gas) -> Vec<f64> {
        self.rows.iter().map(|r| r[gas.index()]).collect()
    }

    /// Rows at `indices`, in the order given.
    pub fn subset(&self, indices: &[usize]) -> GasTable {
        GasTable {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            decisions: indices.iter().map(|&i| self.decisions[i]).collect(),
        }
    }

    /// Copy with row `i` replaced; used by leakage tests.
    pub fn with_row(&self, i: usize, row: [f64; GAS_COUNT]) -> Result<GasTable> {
        let mut rows = self.rows.clone();
        rows[i] = row;
        GasTable::new(rows, self.decisions.clone())
    }

    /// Count of `(faulty, healthy)` rows.
    pub fn class_counts(&self) -> (usize, usize) {
        let healthy = self.decisions.iter().filter(|&&d| d == HEALTHY).count();
        (self.len() - healthy, healthy)
    }

    pub fn to_samples(&self) -> Samples {
        Samples::new(
            gas_names(),
            self.rows.iter().map(|r| r.to_vec()).collect(),
            self.decisions.clone(),
        )
        .expect("gas table rows are always ten wide")
    }

    /// Continuous values of the selected gases.
    pub fn select(&self, gases: &[usize]) -> Samples {
        Samples::new(
            gases.iter().map(|&g| Gas::ALL[g].name().to_string()).collect(),
            self.rows
                .iter()
                .map(|r| gases.iter().map(|&g| r[g]).collect())
                .collect(),
            self.decisions.clone(),
        )
        .expect("selection widths agree")
    }
}

/// Discretized table: every condition cell is a small category code.
///
/// Tables produced by [`discretize`] use codes `1..=4` over the ten gases;
/// the rough-set and tree modules accept any attribute list and code set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalTable {
    attributes: Vec<String>,
    rows: Vec<Vec<u8>>,
    decisions: Vec<u8>,
}

impl CategoricalTable {
    pub fn new(attributes: Vec<String>, rows: Vec<Vec<u8>>, decisions: Vec<u8>) -> Result<Self> {
        if rows.len() != decisions.len() {
            return Err(Error::Schema(format!(
                "{} rows but {} decisions",
                rows.len(),
                decisions.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != attributes.len()) {
            return Err(Error::Shape {
                expected: attributes.len(),
                found: r.len(),
            });
        }
        Ok(CategoricalTable {
            attributes,
            rows,
            decisions,
        })
    }

    /// Convenience constructor naming attributes `a1..am`.
    pub fn from_rows(rows: Vec<Vec<u8>>, decisions: Vec<u8>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let attributes = (1..=width).map(|i| format!("a{i}")).collect();
        CategoricalTable::new(attributes, rows, decisions)
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn width(&self) -> usize {
        self.attributes.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn decisions(&self) -> &[u8] {
        &self.decisions
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes
            .iter()
            .position(|a| a.eq_ignore_ascii_case(name))
    }

    pub fn subset(&self, indices: &[usize]) -> CategoricalTable {
        CategoricalTable {
            attributes: self.attributes.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            decisions: indices.iter().map(|&i| self.decisions[i]).collect(),
        }
    }

    /// Keeps only the listed attribute columns.
    pub fn project(&self, attrs: &[usize]) -> CategoricalTable {
        CategoricalTable {
            attributes: attrs.iter().map(|&a| self.attributes[a].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| attrs.iter().map(|&a| r[a]).collect())
                .collect(),
            decisions: self.decisions.clone(),
        }
    }

    /// Category codes as a real-valued feature matrix.
    pub fn to_samples(&self) -> Samples {
        Samples::new(
            self.attributes.clone(),
            self.rows
                .iter()
                .map(|r| r.iter().map(|&v| f64::from(v)).collect())
                .collect(),
            self.decisions.clone(),
        )
        .expect("categorical rows share the attribute width")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gas_names_round_trip() {
        for g in Gas::ALL {
            assert_eq!(Gas::from_name(g.name()), Some(g));
            assert_eq!(Gas::from_name(&g.name().to_uppercase()), Some(g));
        }
        assert_eq!(Gas::from_name("argon"), None);
    }

    #[test]
    fn rejects_negative_concentration() {
        let mut row = [1.0; GAS_COUNT];
        row[3] = -2.0;
        let err = GasTable::new(vec![[1.0; GAS_COUNT], row], vec![0, 1]).unwrap_err();
        assert!(matches!(err, Error::Validation { row: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_non_binary_decision() {
        assert!(GasTable::new(vec![[1.0; GAS_COUNT]], vec![2]).is_err());
    }

    #[test]
    fn categorical_shape_is_checked() {
        let err = CategoricalTable::from_rows(vec![vec![1, 2], vec![1]], vec![0, 1]).unwrap_err();
        assert!(matches!(err, Error::Shape { expected: 2, found: 1 }));
    }
}
