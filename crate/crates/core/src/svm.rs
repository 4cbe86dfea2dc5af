//! Soft-margin kernel SVM trained with sequential minimal optimization.
//!
//! Labels are `{0, 1}` outside this module and `{-1, +1}` inside it. The
//! decision score is `Σ α_i y_i k(x, x_i) + b`; a score of exactly zero is
//! classified healthy.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bpnn::{read_scaler, write_scaler};
use crate::layers::{fmt_values, parse_values, Lines};
use crate::rng::seeded;
use crate::samples::{Samples, Scaler};
use crate::train::{evaluate_predictions, Evaluation};
use crate::{Error, Result, FAULTY, HEALTHY};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Polynomial { degree: u32, coef: f64 },
    Rbf { gamma: f64 },
    Sigmoid { scale: f64, offset: f64 },
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::parameter(format!("rbf gamma must be positive, got {gamma}")))
            }
            Kernel::Polynomial { degree: 0, .. } => Err(Error::parameter("polynomial degree must be >= 1")),
            _ => Ok(()),
        }
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Polynomial { degree, coef } => (dot(x, y) + coef).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Sigmoid { scale, offset } => (scale * dot(x, y) + offset).tanh(),
        }
    }

    fn spec(&self) -> String {
        match *self {
            Kernel::Linear => "linear".into(),
            Kernel::Polynomial { degree, coef } => format!("polynomial {degree} {coef:.16e}"),
            Kernel::Rbf { gamma } => format!("rbf {gamma:.16e}"),
            Kernel::Sigmoid { scale, offset } => format!("sigmoid {scale:.16e} {offset:.16e}"),
        }
    }

    fn parse(text: &str) -> Result<Kernel> {
        let bad = || Error::Config(format!("model file: bad kernel {text}"));
        let parts: Vec<&str> = text.split_whitespace().collect();
        let num = |i: usize| -> Result<f64> { parts.get(i).and_then(|s| s.parse().ok()).ok_or_else(bad) };
        let k = match parts.first().copied() {
            Some("linear") => Kernel::Linear,
            Some("polynomial") => Kernel::Polynomial {
                degree: parts.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?,
                coef: num(2)?,
            },
            Some("rbf") => Kernel::Rbf { gamma: num(1)? },
            Some("sigmoid") => Kernel::Sigmoid {
                scale: num(1)?,
                offset: num(2)?,
            },
            _ => return Err(bad()),
        };
        k.validate()?;
        Ok(k)
    }
}

pub fn kernel_eval(k: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(k.eval(x, y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// `None` means rbf with `gamma = 1 / width`.
    pub kernel: Option<Kernel>,
    pub c: f64,
    pub tol: f64,
    /// Limit on sweeps over every row; sweeps over unbound rows are free.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: None,
            c: 10.0,
            tol: 1e-3,
            max_passes: 100,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn kernel_for(&self, width: usize) -> Kernel {
        self.kernel.unwrap_or(Kernel::Rbf {
            gamma: 1.0 / width.max(1) as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmTrace {
    /// Successful pair updates.
    pub iterations: usize,
    pub passes: usize,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub b: f64,
    pub support: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// `±1` class signs of the support rows.
    pub signs: Vec<f64>,
    /// Row indices of the support vectors in the training data.
    pub support_indices: Vec<usize>,
    pub scaler: Option<Scaler>,
    pub trace: Option<SvmTrace>,
}

impl SvmModel {
    pub fn width(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if !self.support.is_empty() && x.len() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                found: x.len(),
            });
        }
        Ok(self.score_unchecked(x))
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(self.alphas.iter().zip(&self.signs))
            .map(|(sv, (a, y))| a * y * self.kernel.eval(x, sv))
            .sum::<f64>()
            + self.b
    }

    /// Class and raw score.
    pub fn predict(&self, x: &[f64]) -> Result<(u8, f64)> {
        let s = self.score(x)?;
        Ok((if s >= 0.0 { HEALTHY } else { FAULTY }, s))
    }

    pub fn predict_all(&self, data: &Samples) -> Result<Vec<u8>> {
        data.rows().iter().map(|r| self.predict(r).map(|p| p.0)).collect()
    }

    pub fn evaluate(&self, test: &Samples) -> Result<Evaluation> {
        evaluate_predictions(&self.predict_all(test)?, test.labels())
    }

    /// `w = Σ α_i y_i x_i`, meaningful for the linear kernel.
    pub fn primal_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.width()];
        for (sv, (a, y)) in self.support.iter().zip(self.alphas.iter().zip(&self.signs)) {
            for (wi, x) in w.iter_mut().zip(sv) {
                *wi += a * y * x;
            }
        }
        w
    }

    pub fn save(&self) -> String {
        let mut out = String::from("svm 1\n");
        let _ = writeln!(out, "kernel {}", self.kernel.spec());
        let _ = writeln!(out, "c {:.16e}", self.c);
        let _ = writeln!(out, "b {:.16e}", self.b);
        let _ = writeln!(out, "support {} {}", self.support.len(), self.width());
        for i in 0..self.support.len() {
            let _ = writeln!(
                out,
                "sv {} {:.16e} {:+} {}",
                self.support_indices[i],
                self.alphas[i],
                self.signs[i] as i8,
                fmt_values(&self.support[i])
            );
        }
        write_scaler(&mut out, self.scaler.as_ref());
        out
    }

    pub fn load(text: &str) -> Result<SvmModel> {
        let bad = |what: &str| Error::Config(format!("model file: {what}"));
        let mut lines = Lines::new(text);
        lines.expect("svm")?;
        let kernel = Kernel::parse(lines.expect("kernel")?)?;
        let c: f64 = lines.expect("c")?.parse().map_err(|_| bad("c"))?;
        let b: f64 = lines.expect("b")?.parse().map_err(|_| bad("b"))?;
        let head: Vec<usize> = lines
            .expect("support")?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("support header")))
            .collect::<Result<_>>()?;
        let [count, width] = head[..] else {
            return Err(bad("support header"));
        };
        let mut model = SvmModel {
            kernel,
            c,
            b,
            support: Vec::with_capacity(count),
            alphas: Vec::with_capacity(count),
            signs: Vec::with_capacity(count),
            support_indices: Vec::with_capacity(count),
            scaler: None,
            trace: None,
        };
        for _ in 0..count {
            let rest = lines.expect("sv")?;
            let mut parts = rest.splitn(4, ' ');
            let index = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("sv index"))?;
            let alpha = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("sv alpha"))?;
            let sign: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("sv sign"))?;
            let row = parse_values(parts.next().unwrap_or(""))?;
            if row.len() != width {
                return Err(bad("sv width"));
            }
            model.support_indices.push(index);
            model.alphas.push(alpha);
            model.signs.push(sign);
            model.support.push(row);
        }
        model.scaler = read_scaler(&mut lines)?;
        Ok(model)
    }
}

const FULL_MATRIX_LIMIT: usize = 6000;
const ALPHA_EPS: f64 = 1e-12;

/// Kernel values between training rows, precomputed when they fit.
struct Gram<'a> {
    rows: &'a [Vec<f64>],
    kernel: Kernel,
    full: Option<Vec<f64>>,
}

impl<'a> Gram<'a> {
    fn new(rows: &'a [Vec<f64>], kernel: Kernel) -> Gram<'a> {
        let n = rows.len();
        let full = (n <= FULL_MATRIX_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval(&rows[i], &rows[j]);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            m
        });
        Gram { rows, kernel, full }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        match &self.full {
            Some(m) => m[i * self.rows.len() + j],
            None => self.kernel.eval(&self.rows[i], &self.rows[j]),
        }
    }
}

struct Smo<'a> {
    gram: Gram<'a>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// `f(x_i) - y_i` under the current `alpha` and `b`.
    err: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
    steps: usize,
    rng: crate::rng::Rng,
}

impl Smo<'_> {
    fn bound(&self, i: usize) -> bool {
        self.alpha[i] <= 0.0 || self.alpha[i] >= self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo < ALPHA_EPS {
            return false;
        }
        let k11 = self.gram.get(i1, i1);
        let k12 = self.gram.get(i1, i2);
        let k22 = self.gram.get(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        let mut new2 = if eta > ALPHA_EPS {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // objective at both ends of the segment
            let f1 = y1 * (e1 - self.b) - a1 * k11 - s * a2 * k12;
            let f2 = y2 * (e2 - self.b) - s * a1 * k12 - a2 * k22;
            let objective = |a2n: f64| {
                let a1n = a1 + s * (a2 - a2n);
                a1n * f1 + a2n * f2 + 0.5 * a1n * a1n * k11 + 0.5 * a2n * a2n * k22 + s * a2n * a1n * k12
            };
            let (ol, oh) = (objective(lo), objective(hi));
            if ol < oh - ALPHA_EPS {
                lo
            } else if ol > oh + ALPHA_EPS {
                hi
            } else {
                a2
            }
        };
        if new2 < ALPHA_EPS * c {
            new2 = 0.0;
        } else if new2 > c * (1.0 - ALPHA_EPS) {
            new2 = c;
        }
        if (new2 - a2).abs() < ALPHA_EPS * (new2 + a2 + ALPHA_EPS) {
            return false;
        }
        let mut new1 = a1 + s * (a2 - new2);
        if new1 < ALPHA_EPS * c {
            new1 = 0.0;
        } else if new1 > c * (1.0 - ALPHA_EPS) {
            new1 = c;
        }
        let (d1, d2) = (y1 * (new1 - a1), y2 * (new2 - a2));
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let new_b = if new1 > 0.0 && new1 < c {
            b1
        } else if new2 > 0.0 && new2 < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_b - self.b;
        for i in 0..self.err.len() {
            self.err[i] += d1 * self.gram.get(i1, i) + d2 * self.gram.get(i2, i) + db;
        }
        self.alpha[i1] = new1;
        self.alpha[i2] = new2;
        self.b = new_b;
        self.steps += 1;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let r2 = self.err[i2] * self.y[i2];
        let a2 = self.alpha[i2];
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let n = self.alpha.len();
        let unbound: Vec<usize> = (0..n).filter(|&i| !self.bound(i)).collect();
        if unbound.len() > 1 {
            let e2 = self.err[i2];
            let best = unbound
                .iter()
                .copied()
                .max_by(|&a, &b| (self.err[a] - e2).abs().total_cmp(&(self.err[b] - e2).abs()));
            if let Some(i1) = best {
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        if !unbound.is_empty() {
            let start = self.rng.random_range(0..unbound.len());
            for k in 0..unbound.len() {
                if self.take_step(unbound[(start + k) % unbound.len()], i2) {
                    return true;
                }
            }
        }
        let start = self.rng.random_range(0..n);
        (0..n).any(|k| self.take_step((start + k) % n, i2))
    }

    /// Offset from the final multipliers: mean over unbound support
    /// vectors, else the middle of the interval the bound ones allow.
    fn final_offset(&self) -> f64 {
        let n = self.alpha.len();
        let partial = |i: usize| self.err[i] + self.y[i] - self.b;
        let unbound: Vec<usize> = (0..n).filter(|&i| !self.bound(i)).collect();
        if !unbound.is_empty() {
            return unbound.iter().map(|&i| self.y[i] - partial(i)).sum::<f64>() / unbound.len() as f64;
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let g = self.y[i] - partial(i);
            let at_zero = self.alpha[i] <= 0.0;
            // y f >= 1 at zero, y f <= 1 at C
            if (self.y[i] > 0.0) == at_zero {
                lo = lo.max(g);
            } else {
                hi = hi.min(g);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => self.b,
        }
    }
}

pub fn train_smo(data: &Samples, cfg: &SvmConfig) -> Result<SvmModel> {
    let kernel = cfg.kernel_for(data.width());
    kernel.validate()?;
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::parameter(format!("C must be positive, got {}", cfg.c)));
    }
    if !(cfg.tol > 0.0) || cfg.max_passes == 0 {
        return Err(Error::parameter("tol must be positive and max_passes >= 1"));
    }
    let healthy = data.labels().iter().filter(|&&l| l == HEALTHY).count();
    if healthy == 0 || healthy == data.len() {
        return Err(Error::parameter("svm training needs both classes"));
    }
    let start = Instant::now();
    let y: Vec<f64> = data.labels().iter().map(|&l| if l == HEALTHY { 1.0 } else { -1.0 }).collect();
    let n = y.len();
    let mut smo = Smo {
        gram: Gram::new(data.rows(), kernel),
        err: y.iter().map(|v| -v).collect(),
        y,
        alpha: vec![0.0; n],
        b: 0.0,
        c: cfg.c,
        // tighter internally so the final offset still meets `tol`
        tol: cfg.tol * 0.5,
        steps: 0,
        rng: seeded(cfg.seed),
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut examine_all = true;
    let mut passes = 0;
    let mut full_passes = 0;
    let mut converged = false;
    // unbound sweeps usually settle quickly; the cap only guards cycling
    let sweep_cap = cfg.max_passes.saturating_mul(1000);
    while full_passes < cfg.max_passes && passes < sweep_cap {
        order.shuffle(&mut smo.rng);
        let mut changed = 0;
        for &i in &order {
            if (examine_all || !smo.bound(i)) && smo.examine(i) {
                changed += 1;
            }
        }
        passes += 1;
        if examine_all {
            full_passes += 1;
            if changed == 0 {
                converged = true;
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }
    if !converged {
        log::warn!("smo stopped after {passes} passes without converging");
    }
    let b = smo.final_offset();
    let support_indices: Vec<usize> = (0..n).filter(|&i| smo.alpha[i] > ALPHA_EPS).collect();
    Ok(SvmModel {
        kernel,
        c: cfg.c,
        b,
        support: support_indices.iter().map(|&i| data.rows()[i].clone()).collect(),
        alphas: support_indices.iter().map(|&i| smo.alpha[i]).collect(),
        signs: support_indices.iter().map(|&i| smo.y[i]).collect(),
        support_indices,
        scaler: None,
        trace: Some(SvmTrace {
            iterations: smo.steps,
            passes,
            converged,
            seconds: start.elapsed().as_secs_f64(),
        }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub rows: usize,
    pub satisfied: usize,
    pub max_violation: f64,
}

impl KktReport {
    pub fn rate(&self) -> f64 {
        self.satisfied as f64 / self.rows as f64
    }
}

/// Checks the soft-margin KKT conditions of `model` on its training data.
pub fn kkt_report(model: &SvmModel, train: &Samples, tol: f64) -> Result<KktReport> {
    let mut alpha = vec![0.0; train.len()];
    for (&i, &a) in model.support_indices.iter().zip(&model.alphas) {
        alpha[i] = a;
    }
    let mut satisfied = 0;
    let mut max_violation: f64 = 0.0;
    for (i, (x, &l)) in train.rows().iter().zip(train.labels()).enumerate() {
        let y = if l == HEALTHY { 1.0 } else { -1.0 };
        let m = y * model.score(x)?;
        let violation = if alpha[i] <= ALPHA_EPS * model.c {
            (1.0 - m).max(0.0)
        } else if alpha[i] >= model.c * (1.0 - ALPHA_EPS) {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        max_violation = max_violation.max(violation);
        if violation <= tol {
            satisfied += 1;
        }
    }
    Ok(KktReport {
        rows: train.len(),
        satisfied,
        max_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn samples(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Samples {
        Samples::unnamed(rows, labels).unwrap()
    }

    fn two_points() -> Samples {
        samples(vec![vec![-1.0], vec![1.0]], vec![0, 1])
    }

    fn linear(c: f64) -> SvmConfig {
        SvmConfig {
            kernel: Some(Kernel::Linear),
            c,
            ..SvmConfig::default()
        }
    }

    #[test]
    fn kernel_examples() {
        let rbf = Kernel::Rbf { gamma: 0.3 };
        assert_eq!(kernel_eval(&rbf, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(kernel_eval(&Kernel::Linear, &[1.0, 0.0], &[0.0, 5.0]).unwrap(), 0.0);
        let poly = Kernel::Polynomial { degree: 2, coef: 1.0 };
        assert_eq!(kernel_eval(&poly, &[1.0, 1.0], &[1.0, 1.0]).unwrap(), 9.0);
        let sig = Kernel::Sigmoid { scale: 0.5, offset: -1.0 };
        assert_eq!(kernel_eval(&sig, &[2.0], &[3.0]).unwrap(), 2f64.tanh());
        assert!(kernel_eval(&Kernel::Linear, &[1.0], &[1.0, 2.0]).is_err());
        assert!(Kernel::Rbf { gamma: 0.0 }.validate().is_err());
        assert!(Kernel::Polynomial { degree: 0, coef: 1.0 }.validate().is_err());
    }

    #[test]
    fn two_point_hard_margin() {
        let model = train_smo(&two_points(), &linear(1e6)).unwrap();
        let w = model.primal_weights();
        assert!((w[0] - 1.0).abs() < 1e-9);
        assert!(model.b.abs() < 1e-12);
        assert_eq!(model.support.len(), 2);
        assert!((2.0 / w[0].abs() - 2.0).abs() < 1e-3);
        let (class, score) = model.predict(&[0.0]).unwrap();
        assert_eq!(score, 0.0);
        assert_eq!(class, HEALTHY);
        // unbound support vector of class +1 sits on the margin
        let (_, s) = model.predict(&[1.0]).unwrap();
        assert!((s - 1.0).abs() <= 1e-3);
        assert!(model.trace.unwrap().converged);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = samples(vec![vec![1.0], vec![2.0]], vec![1, 1]);
        assert!(matches!(train_smo(&data, &SvmConfig::default()), Err(Error::Parameter(_))));
    }

    fn xor() -> Samples {
        samples(
            vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn rbf_xor() {
        let cfg = SvmConfig {
            kernel: Some(Kernel::Rbf { gamma: 1.0 }),
            c: 10.0,
            ..SvmConfig::default()
        };
        let data = xor();
        let model = train_smo(&data, &cfg).unwrap();
        assert_eq!(model.evaluate(&data).unwrap().accuracy, 100.0);
        assert_eq!(kkt_report(&model, &data, 1e-3).unwrap().rate(), 1.0);
    }

    fn blobs(seed: u64, n: usize, gap: f64) -> Samples {
        let mut rng = seeded(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let l = (i % 2) as u8;
            let shift = if l == 1 { gap } else { -gap };
            let x: f64 = rng.sample::<f64, _>(StandardNormal) + shift;
            let y: f64 = rng.sample::<f64, _>(StandardNormal) + 0.5 * shift;
            rows.push(vec![x, y]);
            labels.push(l);
        }
        samples(rows, labels)
    }

    fn max_score_gap(a: &SvmModel, b: &SvmModel) -> f64 {
        let mut gap: f64 = 0.0;
        for gx in -10..=10 {
            for gy in -10..=10 {
                let p = [gx as f64 * 0.3, gy as f64 * 0.3];
                gap = gap.max((a.score(&p).unwrap() - b.score(&p).unwrap()).abs());
            }
        }
        gap
    }

    #[test]
    fn duplicated_rows_give_the_same_decision_function() {
        let double = |d: &Samples| d.subset(&(0..d.len()).flat_map(|i| [i, i]).collect::<Vec<_>>());
        let rbf = |c: f64| SvmConfig {
            kernel: Some(Kernel::Rbf { gamma: 0.5 }),
            c,
            ..SvmConfig::default()
        };
        // separable: no multiplier reaches C, so duplicates change nothing
        let data = blobs(3, 40, 3.0);
        let a = train_smo(&data, &rbf(1e3)).unwrap();
        let b = train_smo(&double(&data), &rbf(1e3)).unwrap();
        assert!(a.alphas.iter().all(|&x| x < 1e3));
        assert!(max_score_gap(&a, &b) < 1e-2);
        // overlapping: each duplicate pair carries the weight of one row at C/2
        let data = blobs(3, 40, 1.0);
        let a = train_smo(&data, &rbf(1.0)).unwrap();
        let b = train_smo(&double(&data), &rbf(0.5)).unwrap();
        assert!(a.trace.as_ref().unwrap().converged && b.trace.as_ref().unwrap().converged);
        assert!(max_score_gap(&a, &b) < 1e-2);
    }

    #[test]
    fn support_order_does_not_matter() {
        let data = blobs(5, 60, 0.7);
        let model = train_smo(&data, &SvmConfig::default()).unwrap();
        let mut shuffled = model.clone();
        let mut idx: Vec<usize> = (0..model.support.len()).collect();
        idx.reverse();
        shuffled.support = idx.iter().map(|&i| model.support[i].clone()).collect();
        shuffled.alphas = idx.iter().map(|&i| model.alphas[i]).collect();
        shuffled.signs = idx.iter().map(|&i| model.signs[i]).collect();
        for r in data.rows() {
            let (ca, sa) = model.predict(r).unwrap();
            let (cb, sb) = shuffled.predict(r).unwrap();
            assert!((sa - sb).abs() < 1e-12);
            if sa.abs() > 1e-9 {
                assert_eq!(ca, cb);
            }
        }
    }

    #[test]
    fn deterministic_and_reloadable() {
        let data = blobs(8, 50, 0.5);
        let cfg = SvmConfig {
            seed: 4,
            ..SvmConfig::default()
        };
        let a = train_smo(&data, &cfg).unwrap();
        let b = train_smo(&data, &cfg).unwrap();
        assert_eq!(a.alphas, b.alphas);
        assert_eq!(a.b, b.b);
        let mut with_scaler = a.clone();
        with_scaler.scaler = Some(Scaler::fit(data.rows()).unwrap());
        with_scaler.trace = None;
        let back = SvmModel::load(&with_scaler.save()).unwrap();
        assert_eq!(back, with_scaler);
        for k in [
            Kernel::Linear,
            Kernel::Polynomial { degree: 3, coef: 0.5 },
            Kernel::Sigmoid { scale: 0.1, offset: -0.2 },
        ] {
            assert_eq!(Kernel::parse(&k.spec()).unwrap(), k);
        }
    }

    // Best geometric margin over directions on a fine angle grid.
    fn brute_force_margin(data: &Samples) -> f64 {
        let steps = 200_000;
        let mut best = f64::NEG_INFINITY;
        for s in 0..steps {
            let t = s as f64 / steps as f64 * std::f64::consts::TAU;
            let u = [t.cos(), t.sin()];
            let mut pos = f64::INFINITY;
            let mut neg = f64::NEG_INFINITY;
            for (r, &l) in data.rows().iter().zip(data.labels()) {
                let p = u[0] * r[0] + u[1] * r[1];
                if l == 1 {
                    pos = pos.min(p);
                } else {
                    neg = neg.max(p);
                }
            }
            best = best.max((pos - neg) / 2.0);
        }
        best
    }

    #[test]
    fn linear_margin_matches_brute_force() {
        let mut checked = 0;
        for seed in 0..20 {
            let data = blobs(seed, 16, 2.5);
            let margin = brute_force_margin(&data);
            if margin <= 0.05 {
                continue;
            }
            let model = train_smo(&data, &linear(1e4)).unwrap();
            assert!(model.trace.as_ref().unwrap().converged);
            assert_eq!(model.evaluate(&data).unwrap().accuracy, 100.0);
            let w = model.primal_weights();
            let svm_margin = 1.0 / (w[0] * w[0] + w[1] * w[1]).sqrt();
            assert!((svm_margin - margin).abs() <= 0.02 * margin, "seed {seed}: {svm_margin} vs {margin}");
            checked += 1;
        }
        assert!(checked >= 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dual_feasible_and_kkt(seed in any::<u64>(), n in 6usize..40, c in 0.1f64..20.0) {
            let data = blobs(seed, n, 0.6);
            let cfg = SvmConfig { c, seed, ..SvmConfig::default() };
            let model = train_smo(&data, &cfg).unwrap();
            let balance: f64 = model.alphas.iter().zip(&model.signs).map(|(a, y)| a * y).sum();
            prop_assert!(balance.abs() <= 1e-8);
            for &a in &model.alphas {
                prop_assert!(a > 1e-12 && a <= c);
            }
            if model.trace.as_ref().unwrap().converged {
                let report = kkt_report(&model, &data, 1e-3).unwrap();
                prop_assert_eq!(report.satisfied, report.rows, "max violation {}", report.max_violation);
            }
        }
    }
}
