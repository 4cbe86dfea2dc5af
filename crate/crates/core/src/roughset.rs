//! Pawlak rough sets over a discretized decision table: indiscernibility
//! partitions, approximations, degree of dependency and greedy reducts.
//!
//! Rows may carry integer weights so that a table of aggregated granules
//! (see [`crate::granular`]) behaves like the multiset of rows it stands
//! for. All cardinalities are integers; dependency comparisons are exact.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalTable;
use crate::reduction::{Diagnostics, ReductionMethod, ReductionResult};
use crate::{Error, Result};

/// Universe, condition attributes and decision, with per-row weights.
#[derive(Clone, Debug, PartialEq)]
pub struct InformationSystem {
    table: CategoricalTable,
    weights: Vec<u64>,
}

impl InformationSystem {
    pub fn new(table: &CategoricalTable) -> Self {
        InformationSystem {
            weights: vec![1; table.len()],
            table: table.clone(),
        }
    }

    pub fn weighted(table: &CategoricalTable, weights: Vec<u64>) -> Result<Self> {
        if weights.len() != table.len() {
            return Err(Error::Schema(format!(
                "{} weights for {} rows",
                weights.len(),
                table.len()
            )));
        }
        Ok(InformationSystem {
            table: table.clone(),
            weights,
        })
    }

    pub fn table(&self) -> &CategoricalTable {
        &self.table
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn attribute_count(&self) -> usize {
        self.table.width()
    }

    fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    fn check_attributes(&self, attrs: &[usize]) -> Result<()> {
        if let Some(a) = attrs.iter().find(|&&a| a >= self.attribute_count()) {
            return Err(Error::parameter(format!(
                "unknown attribute index {a} (table has {})",
                self.attribute_count()
            )));
        }
        Ok(())
    }

    /// Blocks of rows agreeing on every attribute in `attrs`, ordered by
    /// first member. An empty `attrs` yields a single block.
    fn blocks(&self, attrs: &[usize]) -> Vec<Vec<usize>> {
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, row) in self.table.rows().iter().enumerate() {
            let key: Vec<u8> = attrs.iter().map(|&a| row[a]).collect();
            let b = *index.entry(key).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i);
        }
        blocks
    }

    fn dependency_unchecked(&self, attrs: &[usize]) -> Dependency {
        let decisions = self.table.decisions();
        let positive = self
            .blocks(attrs)
            .into_iter()
            .filter(|b| b.iter().all(|&i| decisions[i] == decisions[b[0]]))
            .map(|b| b.iter().map(|&i| self.weights[i]).sum::<u64>())
            .sum();
        Dependency {
            positive,
            total: self.total_weight(),
        }
    }
}

/// The B-indiscernibility partition of the universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub key: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
}

/// Positive, boundary and negative regions of a target set, plus the
/// approximations they derive from. All row lists are ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionDecomposition {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
    pub boundary: Vec<usize>,
    pub negative: Vec<usize>,
}

impl RegionDecomposition {
    pub fn positive(&self) -> &[usize] {
        &self.lower
    }
}

/// `|POS_C(D)| / |U|` kept as exact (weighted) cardinalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dependency {
    pub positive: u64,
    pub total: u64,
}

impl Dependency {
    pub fn value(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.positive as f64 / self.total as f64
        }
    }
}

impl PartialOrd for Dependency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dependency {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = u128::from(self.positive) * u128::from(other.total);
        let rhs = u128::from(other.positive) * u128::from(self.total);
        lhs.cmp(&rhs)
    }
}

pub fn equivalence_classes(is: &InformationSystem, attrs: &[usize]) -> Result<Partition> {
    if attrs.is_empty() {
        return Err(Error::parameter("attribute subset must be non-empty"));
    }
    is.check_attributes(attrs)?;
    Ok(Partition {
        key: attrs.to_vec(),
        blocks: is.blocks(attrs),
    })
}

/// Lower/upper approximation of the row set `target` under `attrs`.
pub fn approximate(
    is: &InformationSystem,
    attrs: &[usize],
    target: &[usize],
) -> Result<RegionDecomposition> {
    is.check_attributes(attrs)?;
    let n = is.table.len();
    let mut in_target = vec![false; n];
    for &i in target {
        if i >= n {
            return Err(Error::parameter(format!("row {i} outside the universe of {n}")));
        }
        in_target[i] = true;
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for block in is.blocks(attrs) {
        let hits = block.iter().filter(|&&i| in_target[i]).count();
        if hits == block.len() {
            lower.extend_from_slice(&block);
        }
        if hits > 0 {
            upper.extend_from_slice(&block);
        }
    }
    lower.sort_unstable();
    upper.sort_unstable();
    let boundary = upper
        .iter()
        .copied()
        .filter(|i| lower.binary_search(i).is_err())
        .collect();
    let negative = (0..n).filter(|i| upper.binary_search(i).is_err()).collect();
    Ok(RegionDecomposition {
        lower,
        upper,
        boundary,
        negative,
    })
}

/// Degree to which the decision depends on `attrs`: the share of rows whose
/// `attrs`-block is decision-pure.
pub fn degree_of_dependency(is: &InformationSystem, attrs: &[usize]) -> Result<Dependency> {
    if attrs.is_empty() {
        return Err(Error::parameter("attribute subset must be non-empty"));
    }
    is.check_attributes(attrs)?;
    Ok(is.dependency_unchecked(attrs))
}

/// One step of backward elimination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub removed: String,
    pub dependency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductTrace {
    pub full_dependency: f64,
    pub reduct_dependency: f64,
    pub eliminated: Vec<Elimination>,
}

/// Greedy backward elimination.
///
/// From the current set `M`, evaluates `γ(M - {a})` for every `a`, takes
/// the best, and removes it only if it keeps the dependency of the full
/// attribute set. On ties the highest-index candidate is removed, so the
/// lowest-index attribute of an interchangeable group survives. Stops when no single removal
/// preserves it; at least one attribute is always kept.
pub fn reduct_search(is: &InformationSystem) -> Result<ReductionResult> {
    let m = is.attribute_count();
    if m < 2 {
        return Err(Error::parameter(format!("reduct search needs >= 2 attributes, got {m}")));
    }
    let all: Vec<usize> = (0..m).collect();
    let full = is.dependency_unchecked(&all);
    if full.positive == 0 {
        return Err(Error::DependencyDegenerate);
    }

    let mut current = all;
    let mut eliminated = Vec::new();
    while current.len() > 1 {
        let mut best: Option<(usize, Dependency)> = None;
        for pos in 0..current.len() {
            let mut candidate = current.clone();
            candidate.remove(pos);
            let dep = is.dependency_unchecked(&candidate);
            if best.is_none_or(|(_, b)| dep >= b) {
                best = Some((pos, dep));
            }
        }
        let (pos, dep) = best.expect("at least two candidates");
        if dep != full {
            break;
        }
        let attr = current.remove(pos);
        eliminated.push(Elimination {
            removed: is.table.attributes()[attr].clone(),
            dependency: dep.value(),
        });
    }

    let reduct = is.dependency_unchecked(&current);
    Ok(ReductionResult {
        method: ReductionMethod::RoughSet,
        attributes: is.table.attributes().to_vec(),
        kept: current,
        diagnostics: Diagnostics::RoughSet(ReductTrace {
            full_dependency: full.value(),
            reduct_dependency: reduct.value(),
            eliminated,
        }),
        warnings: Vec::new(),
    })
}
