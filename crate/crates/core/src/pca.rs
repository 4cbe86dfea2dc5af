//! Principal component analysis of standardized gas tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::reduction::{Diagnostics, ReductionMethod, ReductionResult};
use crate::samples::{IntervalSamples, Samples, Scaler};
use crate::{Error, Result};

const JACOBI_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric `m x m` matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    m: usize,
    data: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<CovarianceMatrix> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::parameter("covariance matrix must be square"));
        }
        Ok(CovarianceMatrix {
            m,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

/// `Σ x_i x_j / n` over standardized rows.
pub fn covariance(rows: &[Vec<f64>]) -> Result<CovarianceMatrix> {
    if rows.len() < 2 {
        return Err(Error::parameter(format!("covariance needs at least 2 rows, got {}", rows.len())));
    }
    let m = rows[0].len();
    let n = rows.len() as f64;
    let mut data = vec![0.0; m * m];
    for r in rows {
        if r.len() != m {
            return Err(Error::Shape { expected: m, found: r.len() });
        }
        for i in 0..m {
            for j in i..m {
                data[i * m + j] += r[i] * r[j];
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            let v = data[i * m + j] / n;
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    Ok(CovarianceMatrix { m, data })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors aligned with `eigenvalues`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Percent of the eigenvalue total per component.
    pub proportions: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition.
pub fn eigendecompose(c: &CovarianceMatrix) -> Result<EigenSystem> {
    let m = c.m;
    for i in 0..m {
        for j in i + 1..m {
            if (c.get(i, j) - c.get(j, i)).abs() > SYMMETRY_TOL {
                return Err(Error::Validation {
                    row: i,
                    message: format!("covariance matrix is not symmetric at ({i}, {j})"),
                });
            }
        }
    }
    let mut a = c.data.clone();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * norm.max(1.0) {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = cos * akp - sin * akq;
                    a[k * m + q] = sin * akp + cos * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = cos * apk - sin * aqk;
                    a[q * m + k] = sin * apk + cos * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = cos * vkp - sin * vkq;
                    v[k * m + q] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..m)
        .map(|k| {
            let mut vec: Vec<f64> = (0..m).map(|i| v[i * m + k]).collect();
            orient(&mut vec);
            (a[k * m + k], vec)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let total: f64 = pairs.iter().map(|p| p.0).sum();
    let proportions = pairs
        .iter()
        .map(|p| if total > 0.0 { 100.0 * p.0 / total } else { 0.0 })
        .collect();
    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        proportions,
    })
}

// Largest-magnitude entry positive; the first one wins ties.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentPolicy {
    FixedCount(usize),
    /// Smallest prefix reaching this cumulative percentage.
    CumulativeThreshold(f64),
}

impl Default for ComponentPolicy {
    fn default() -> Self {
        ComponentPolicy::FixedCount(3)
    }
}

pub fn component_count(e: &EigenSystem, policy: ComponentPolicy) -> Result<usize> {
    let m = e.eigenvalues.len();
    match policy {
        ComponentPolicy::FixedCount(p) => {
            if p == 0 || p > m {
                return Err(Error::parameter(format!("component count {p} outside 1..={m}")));
            }
            Ok(p)
        }
        ComponentPolicy::CumulativeThreshold(tau) => {
            if !(tau > 0.0 && tau <= 100.0) {
                return Err(Error::parameter(format!("threshold {tau} outside (0, 100]")));
            }
            let mut cumulative = 0.0;
            for (k, p) in e.proportions.iter().enumerate() {
                cumulative += p;
                if cumulative >= tau - 1e-9 {
                    return Ok(k + 1);
                }
            }
            Ok(m)
        }
    }
}

/// Kept eigenvectors plus the standardization they expect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub names: Vec<String>,
    pub scaler: Scaler,
    /// One unit vector per component, each of length `m`.
    pub basis: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub proportions: Vec<f64>,
}

pub fn select_components(
    e: &EigenSystem,
    policy: ComponentPolicy,
    names: Vec<String>,
    scaler: Scaler,
) -> Result<PcaProjection> {
    let p = component_count(e, policy)?;
    if names.len() != e.eigenvalues.len() || scaler.width() != names.len() {
        return Err(Error::Shape {
            expected: e.eigenvalues.len(),
            found: names.len(),
        });
    }
    Ok(PcaProjection {
        names,
        scaler,
        basis: e.eigenvectors[..p].to_vec(),
        eigenvalues: e.eigenvalues.clone(),
        proportions: e.proportions.clone(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PcaProjection {
    pub fn components(&self) -> usize {
        self.basis.len()
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn component_names(&self) -> Vec<String> {
        (1..=self.components()).map(|k| format!("pc{k}")).collect()
    }

    /// Coordinates of an already standardized row.
    pub fn rotate(&self, z: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, z)).collect()
    }

    /// Standardized row rebuilt from its coordinates.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        for (b, c) in self.basis.iter().zip(coords) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }

    pub fn project_row(&self, raw: &[f64]) -> Vec<f64> {
        self.rotate(&self.scaler.transform_row(raw))
    }

    fn check(&self, width: usize) -> Result<()> {
        if width != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                found: width,
            });
        }
        Ok(())
    }

    /// Standardizes with the stored parameters and rotates.
    pub fn project(&self, raw: &Samples) -> Result<Samples> {
        self.check(raw.width())?;
        Samples::new(
            self.component_names(),
            raw.rows().iter().map(|r| self.project_row(r)).collect(),
            raw.labels().to_vec(),
        )
    }

    /// Interval image of raw boxes under standardization and rotation.
    pub fn project_intervals(&self, raw: &IntervalSamples) -> Result<IntervalSamples> {
        self.check(raw.width())?;
        let z = self.scaler.transform_intervals(raw)?;
        let mut lower = Vec::with_capacity(z.len());
        let mut upper = Vec::with_capacity(z.len());
        for i in 0..z.len() {
            let (lo, up) = z.row(i);
            let (mut l, mut u) = (Vec::new(), Vec::new());
            for b in &self.basis {
                let (mut a, mut c) = (0.0, 0.0);
                for ((w, x0), x1) in b.iter().zip(lo).zip(up) {
                    let (p, q) = (w * x0, w * x1);
                    a += p.min(q);
                    c += p.max(q);
                }
                l.push(a);
                u.push(c);
            }
            lower.push(l);
            upper.push(u);
        }
        IntervalSamples::new(self.component_names(), lower, upper, raw.labels().to_vec())
    }

    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics::Pca {
            eigenvalues: self.eigenvalues.clone(),
            proportions: self.proportions.clone(),
            components: self.components(),
            loadings: self.basis.clone(),
        }
    }

    pub fn reduction(&self) -> ReductionResult {
        ReductionResult {
            method: ReductionMethod::Pca,
            attributes: self.names.clone(),
            kept: Vec::new(),
            diagnostics: self.diagnostics(),
            warnings: Vec::new(),
        }
    }

    /// Plain-text export with 17 significant digits per value.
    pub fn export(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let _ = writeln!(out, "m {}", self.width());
        let _ = writeln!(out, "p {}", self.components());
        let _ = writeln!(out, "names {}", self.names.join(" "));
        let _ = writeln!(out, "mean {}", fmt(&self.scaler.mean));
        let _ = writeln!(out, "std {}", fmt(&self.scaler.std));
        let flags: Vec<&str> = self.scaler.constant.iter().map(|&c| if c { "1" } else { "0" }).collect();
        let _ = writeln!(out, "constant {}", flags.join(" "));
        let _ = writeln!(out, "eigenvalues {}", fmt(&self.eigenvalues));
        let _ = writeln!(out, "proportions {}", fmt(&self.proportions));
        // basis row-major as an m x p matrix
        for i in 0..self.width() {
            let row: Vec<f64> = self.basis.iter().map(|b| b[i]).collect();
            let _ = writeln!(out, "basis {}", fmt(&row));
        }
        out
    }

    pub fn import(text: &str) -> Result<PcaProjection> {
        let bad = |what: &str| Error::Config(format!("projection file: {what}"));
        let mut m = None;
        let mut p = None;
        let mut names = Vec::new();
        let (mut mean, mut std, mut constant) = (Vec::new(), Vec::new(), Vec::new());
        let (mut eigenvalues, mut proportions, mut rows) = (Vec::new(), Vec::new(), Vec::new());
        let floats = |rest: &[&str]| -> Result<Vec<f64>> {
            rest.iter()
                .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s}"))))
                .collect()
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let rest = &parts[1..];
            match parts[0] {
                "m" => m = rest.first().and_then(|s| s.parse::<usize>().ok()),
                "p" => p = rest.first().and_then(|s| s.parse::<usize>().ok()),
                "names" => names = rest.iter().map(|s| s.to_string()).collect(),
                "mean" => mean = floats(rest)?,
                "std" => std = floats(rest)?,
                "constant" => constant = rest.iter().map(|s| *s == "1").collect(),
                "eigenvalues" => eigenvalues = floats(rest)?,
                "proportions" => proportions = floats(rest)?,
                "basis" => rows.push(floats(rest)?),
                other => return Err(bad(&format!("unknown key {other}"))),
            }
        }
        let m = m.ok_or_else(|| bad("missing m"))?;
        let p = p.ok_or_else(|| bad("missing p"))?;
        if names.len() != m || mean.len() != m || std.len() != m || constant.len() != m || rows.len() != m {
            return Err(bad("field lengths disagree with m"));
        }
        if rows.iter().any(|r| r.len() != p) || p == 0 || p > m {
            return Err(bad("basis rows disagree with p"));
        }
        let basis = (0..p).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
        Ok(PcaProjection {
            names,
            scaler: Scaler { mean, std, constant },
            basis,
            eigenvalues,
            proportions,
        })
    }
}

/// Standardize, decompose and select on raw training samples.
pub fn fit_pca(raw: &Samples, policy: ComponentPolicy) -> Result<PcaProjection> {
    let scaler = Scaler::fit(raw.rows())?;
    let z = scaler.transform(raw)?;
    let c = covariance(z.rows())?;
    let e = eigendecompose(&c)?;
    select_components(&e, policy, raw.names().to_vec(), scaler)
}
