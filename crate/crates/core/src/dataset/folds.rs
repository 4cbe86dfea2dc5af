use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

/// Assignment of every row to one of `k` cross-validation folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified `k`-fold plan over `labels`.
///
/// Each class is shuffled with the seed and dealt round-robin; the deal
/// continues across classes so fold sizes differ by at most one overall and
/// per class.
pub fn kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::parameter(format!("fold count must be >= 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::parameter(format!(
            "fold count {k} exceeds row count {}",
            labels.len()
        )));
    }
    let mut rng = seeded(seed);
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for class in classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        for i in rows {
            assignments[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, assignments })
}

/// Seeded random partition of `0..n` into groups sized by `ratios`.
///
/// Group sizes are rounded from `n * ratio`; every group with a positive
/// ratio gets at least one row, and the first group absorbs the rounding
/// remainder.
pub fn ratio_split(n: usize, ratios: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    let total: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| *r < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::parameter(format!("split ratios {ratios:?} must be >= 0 and sum to 1")));
    }
    let wanted = ratios.iter().filter(|r| **r > 0.0).count();
    if n < wanted {
        return Err(Error::parameter(format!(
            "{n} rows cannot fill {wanted} non-empty splits"
        )));
    }
    let mut sizes: Vec<usize> = ratios
        .iter()
        .map(|r| {
            if *r > 0.0 {
                ((n as f64 * r).round() as usize).max(1)
            } else {
                0
            }
        })
        .collect();
    // shrink or grow the first positive group so sizes sum to n
    let first = ratios.iter().position(|r| *r > 0.0).unwrap_or(0);
    let rest: usize = sizes.iter().enumerate().filter(|(i, _)| *i != first).map(|(_, s)| s).sum();
    if rest >= n {
        return Err(Error::parameter(format!("{n} rows too few for split {ratios:?}")));
    }
    sizes[first] = n - rest;

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded(seed));
    let mut groups = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for s in sizes {
        let mut g = perm[start..start + s].to_vec();
        g.sort_unstable();
        groups.push(g);
        start += s;
    }
    Ok(groups)
}
