//! Real-valued feature matrices consumed by the classifiers.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Named real-valued features with a binary label per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl Samples {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != names.len()) {
            return Err(Error::Shape {
                expected: names.len(),
                found: r.len(),
            });
        }
        Ok(Samples { names, rows, labels })
    }

    /// Features named `x1..xm`.
    pub fn unnamed(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        Samples::new((1..=width).map(|i| format!("x{i}")).collect(), rows, labels)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn subset(&self, indices: &[usize]) -> Samples {
        Samples {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Same rows with every label replaced by `1 - label`.
    pub fn flipped(&self) -> Samples {
        Samples {
            names: self.names.clone(),
            rows: self.rows.clone(),
            labels: self.labels.iter().map(|&l| 1 - l.min(1)).collect(),
        }
    }
}

/// Per-column affine standardization `(x - mean) / std` with population std.
///
/// Columns whose std is zero (relative to their magnitude) are flagged
/// constant and map to all zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Scaler> {
        if rows.len() < 2 {
            return Err(Error::parameter(format!(
                "standardization needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let width = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        let constant = std
            .iter()
            .zip(&mean)
            .map(|(s, m)| *s <= 1e-12 * m.abs().max(1.0))
            .collect();
        Ok(Scaler { mean, std, constant })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.constant[j] {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect()
    }

    /// `z * std + mean`; constant columns come back as their mean.
    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, z)| {
                if self.constant[j] {
                    self.mean[j]
                } else {
                    z * self.std[j] + self.mean[j]
                }
            })
            .collect()
    }

    pub fn transform(&self, samples: &Samples) -> Result<Samples> {
        if samples.width() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                found: samples.width(),
            });
        }
        Ok(Samples {
            names: samples.names.clone(),
            rows: samples.rows.iter().map(|r| self.transform_row(r)).collect(),
            labels: samples.labels.clone(),
        })
    }

    pub fn transform_intervals(&self, samples: &IntervalSamples) -> Result<IntervalSamples> {
        if samples.width() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                found: samples.width(),
            });
        }
        IntervalSamples::new(
            samples.names.clone(),
            samples.lower.iter().map(|r| self.transform_row(r)).collect(),
            samples.upper.iter().map(|r| self.transform_row(r)).collect(),
            samples.labels.clone(),
        )
    }
}

/// Rows whose features are closed intervals `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSamples {
    names: Vec<String>,
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl IntervalSamples {
    pub fn new(
        names: Vec<String>,
        lower: Vec<Vec<f64>>,
        upper: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if lower.len() != labels.len() || upper.len() != labels.len() {
            return Err(Error::Schema("interval bounds and labels differ in length".into()));
        }
        for (i, (lo, up)) in lower.iter().zip(&upper).enumerate() {
            if lo.len() != names.len() || up.len() != names.len() {
                return Err(Error::Shape {
                    expected: names.len(),
                    found: lo.len().min(up.len()),
                });
            }
            if lo.iter().zip(up).any(|(l, u)| l > u) {
                return Err(Error::Validation {
                    row: i,
                    message: "interval lower bound exceeds upper bound".into(),
                });
            }
        }
        Ok(IntervalSamples {
            names,
            lower,
            upper,
            labels,
        })
    }

    /// Degenerate intervals `[x, x]` around every point.
    pub fn from_points(samples: &Samples) -> IntervalSamples {
        IntervalSamples {
            names: samples.names.clone(),
            lower: samples.rows.clone(),
            upper: samples.rows.clone(),
            labels: samples.labels.clone(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn lower(&self) -> &[Vec<f64>] {
        &self.lower
    }

    pub fn upper(&self) -> &[Vec<f64>] {
        &self.upper
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.lower[i], &self.upper[i])
    }

    pub fn subset(&self, indices: &[usize]) -> IntervalSamples {
        IntervalSamples {
            names: self.names.clone(),
            lower: indices.iter().map(|&i| self.lower[i].clone()).collect(),
            upper: indices.iter().map(|&i| self.upper[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    /// Interval midpoints as a point sample.
    pub fn midpoints(&self) -> Samples {
        Samples {
            names: self.names.clone(),
            rows: self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(l, u)| l.iter().zip(u).map(|(a, b)| 0.5 * (a + b)).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }
}
