//! The common output of every attribute reducer.

use serde::{Deserialize, Serialize};

use crate::dtree::AttributeUsage;
use crate::granular::GranularSummary;
use crate::roughset::ReductTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMethod {
    Pca,
    RoughSet,
    Granular,
    DecisionTree,
}

/// Method-specific evidence behind a reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    Pca {
        eigenvalues: Vec<f64>,
        /// Percentage of total variance per component.
        proportions: Vec<f64>,
        components: usize,
        /// Kept eigenvectors, one `Vec` per component, in attribute order.
        loadings: Vec<Vec<f64>>,
    },
    RoughSet(ReductTrace),
    Granular(GranularSummary),
    Tree { usage: Vec<AttributeUsage> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub method: ReductionMethod,
    /// Candidate attribute names, in column order.
    pub attributes: Vec<String>,
    /// Indices into `attributes` that survive, ascending. Empty for PCA,
    /// which keeps a projection instead.
    pub kept: Vec<usize>,
    pub diagnostics: Diagnostics,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ReductionResult {
    pub fn kept_names(&self) -> Vec<String> {
        self.kept.iter().map(|&i| self.attributes[i].clone()).collect()
    }

    /// Short human label: kept names, or `pca:p=N`.
    pub fn label(&self) -> Vec<String> {
        match &self.diagnostics {
            Diagnostics::Pca { components, .. } => vec![format!("pca:p={components}")],
            _ => self.kept_names(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
