//! Decision trees on a discretized table, used to select attributes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{ratio_split, CategoricalTable, FAULTY, HEALTHY};
use crate::reduction::{Diagnostics, ReductionMethod, ReductionResult};
use crate::{Error, Result};

const SCORE_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gain,
    #[default]
    GainRatio,
}

/// Class entropy in bits.
pub fn entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::parameter("entropy of an empty count vector"));
    }
    Ok(entropy_of(counts, total))
}

fn entropy_of(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub attribute: String,
    /// Entropy of the attribute's own value distribution.
    pub split_entropy: f64,
    pub conditional_entropy: f64,
    pub gain: f64,
    /// `None` when the attribute is constant.
    pub gain_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub class_entropy: f64,
    pub entries: Vec<GainEntry>,
}

fn class_counts(decisions: impl Iterator<Item = u8>) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for d in decisions {
        counts[d as usize] += 1;
    }
    counts
}

fn gain_on(table: &CategoricalTable, rows: &[usize], attr: usize) -> GainEntry {
    let d = table.decisions();
    let parent = class_counts(rows.iter().map(|&r| d[r]));
    let mut by_value: BTreeMap<u8, [u64; 2]> = BTreeMap::new();
    for &r in rows {
        by_value.entry(table.rows()[r][attr]).or_default()[d[r] as usize] += 1;
    }
    let n = rows.len() as u64;
    let class_entropy = entropy_of(&parent, n);
    let sizes: Vec<u64> = by_value.values().map(|c| c[0] + c[1]).collect();
    let conditional: f64 = by_value
        .values()
        .map(|c| {
            let nv = c[0] + c[1];
            nv as f64 / n as f64 * entropy_of(c, nv)
        })
        .sum();
    let split_entropy = entropy_of(&sizes, n);
    let gain = (class_entropy - conditional).max(0.0);
    GainEntry {
        attribute: table.attributes()[attr].clone(),
        split_entropy,
        conditional_entropy: conditional,
        gain,
        gain_ratio: (split_entropy > 0.0).then(|| gain / split_entropy),
    }
}

pub fn information_gain(table: &CategoricalTable, attribute: &str) -> Result<GainEntry> {
    let attr = table
        .attribute_index(attribute)
        .ok_or_else(|| Error::Schema(format!("unknown attribute {attribute}")))?;
    if table.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<usize> = (0..table.len()).collect();
    Ok(gain_on(table, &rows, attr))
}

pub fn gain_report(table: &CategoricalTable) -> Result<GainReport> {
    if table.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<usize> = (0..table.len()).collect();
    Ok(GainReport {
        class_entropy: entropy_of(&class_counts(table.decisions().iter().copied()), table.len() as u64),
        entries: (0..table.width()).map(|a| gain_on(table, &rows, a)).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        class: u8,
        /// Training rows reaching the node, indexed by decision.
        counts: [u64; 2],
    },
    Internal {
        attribute: usize,
        counts: [u64; 2],
        children: BTreeMap<u8, TreeNode>,
    },
}

fn majority(counts: [u64; 2]) -> u8 {
    if counts[FAULTY as usize] > counts[HEALTHY as usize] {
        FAULTY
    } else {
        HEALTHY
    }
}

impl TreeNode {
    pub fn counts(&self) -> [u64; 2] {
        match self {
            TreeNode::Leaf { counts, .. } | TreeNode::Internal { counts, .. } => *counts,
        }
    }

    pub fn majority(&self) -> u8 {
        majority(self.counts())
    }

    fn leaf(counts: [u64; 2]) -> TreeNode {
        TreeNode::Leaf {
            class: majority(counts),
            counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => {
                1 + children.values().map(TreeNode::depth).max().unwrap_or(0)
            }
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.values().map(TreeNode::leaves).sum(),
        }
    }

    pub fn predict(&self, row: &[u8]) -> u8 {
        match self {
            TreeNode::Leaf { class, .. } => *class,
            TreeNode::Internal { attribute, children, counts } => match children.get(&row[*attribute]) {
                Some(child) => child.predict(row),
                None => majority(*counts),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub attributes: Vec<String>,
    pub criterion: SplitCriterion,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn predict(&self, row: &[u8]) -> u8 {
        self.root.predict(row)
    }

    pub fn correct(&self, table: &CategoricalTable) -> usize {
        table
            .rows()
            .iter()
            .zip(table.decisions())
            .filter(|(r, &d)| self.predict(r) == d)
            .count()
    }

    /// Fraction of `table` classified correctly; 0 for an empty table.
    pub fn accuracy(&self, table: &CategoricalTable) -> f64 {
        if table.is_empty() {
            return 0.0;
        }
        self.correct(table) as f64 / table.len() as f64
    }

    /// Indented text, one node per line.
    pub fn export(&self) -> String {
        let mut out = String::new();
        match &self.root {
            TreeNode::Leaf { .. } => {
                let _ = writeln!(out, "{}", leaf_text(&self.root));
            }
            node => self.export_node(node, 0, &mut out),
        }
        out
    }

    fn export_node(&self, node: &TreeNode, depth: usize, out: &mut String) {
        let TreeNode::Internal { attribute, children, .. } = node else {
            return;
        };
        for (value, child) in children {
            let indent = "  ".repeat(depth);
            let name = &self.attributes[*attribute];
            if child.is_leaf() {
                let _ = writeln!(out, "{indent}{name}={value} -> {}", leaf_text(child));
            } else {
                let _ = writeln!(out, "{indent}{name}={value}");
                self.export_node(child, depth + 1, out);
            }
        }
    }
}

fn leaf_text(node: &TreeNode) -> String {
    let c = node.counts();
    format!("class {} ({}/{})", node.majority(), c[HEALTHY as usize], c[FAULTY as usize])
}

pub fn build_tree(table: &CategoricalTable, criterion: SplitCriterion, min_rows: usize) -> Result<DecisionTree> {
    if table.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<usize> = (0..table.len()).collect();
    let mut used = vec![false; table.width()];
    Ok(DecisionTree {
        attributes: table.attributes().to_vec(),
        criterion,
        root: grow(table, &rows, criterion, min_rows.max(1), &mut used),
    })
}

// Splits any impure node that has enough rows and an attribute taking at
// least two values among them, including when the best score is zero.
fn grow(
    table: &CategoricalTable,
    rows: &[usize],
    criterion: SplitCriterion,
    min_rows: usize,
    used: &mut [bool],
) -> TreeNode {
    let d = table.decisions();
    let counts = class_counts(rows.iter().map(|&r| d[r]));
    if counts[0] == 0 || counts[1] == 0 || rows.len() < min_rows {
        return TreeNode::leaf(counts);
    }
    let mut best: Option<(usize, f64)> = None;
    for attr in (0..table.width()).filter(|&a| !used[a]) {
        let entry = gain_on(table, rows, attr);
        let Some(ratio) = entry.gain_ratio else { continue };
        let score = match criterion {
            SplitCriterion::Gain => entry.gain,
            SplitCriterion::GainRatio => ratio,
        };
        if best.is_none_or(|(_, b)| score > b + SCORE_TIE) {
            best = Some((attr, score));
        }
    }
    let Some((attribute, _)) = best else {
        return TreeNode::leaf(counts);
    };
    let mut groups: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        groups.entry(table.rows()[r][attribute]).or_default().push(r);
    }
    used[attribute] = true;
    let children = groups
        .into_iter()
        .map(|(v, sub)| (v, grow(table, &sub, criterion, min_rows, used)))
        .collect();
    used[attribute] = false;
    TreeNode::Internal {
        attribute,
        counts,
        children,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub attribute: String,
    pub depth: usize,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub collapses: Vec<Collapse>,
    pub warnings: Vec<String>,
}

/// Reduced-error pruning against held-out rows.
pub fn prune(tree: &DecisionTree, validation: &CategoricalTable) -> DecisionTree {
    prune_with_trace(tree, validation).0
}

pub fn prune_with_trace(tree: &DecisionTree, validation: &CategoricalTable) -> (DecisionTree, PruneTrace) {
    let mut trace = PruneTrace::default();
    if validation.is_empty() {
        let msg = "empty validation set, pruning skipped".to_string();
        log::warn!("{msg}");
        trace.warnings.push(msg);
        return (tree.clone(), trace);
    }
    let mut pruned = tree.clone();
    let rows: Vec<usize> = (0..validation.len()).collect();
    let mut correct = tree.correct(validation) as i64;
    let mut ctx = PruneCtx {
        validation,
        attributes: &tree.attributes,
        correct: &mut correct,
        trace: &mut trace,
    };
    prune_node(&mut pruned.root, &rows, 0, &mut ctx);
    (pruned, trace)
}

struct PruneCtx<'a> {
    validation: &'a CategoricalTable,
    attributes: &'a [String],
    correct: &'a mut i64,
    trace: &'a mut PruneTrace,
}

// Returns the number of routed rows the (possibly collapsed) subtree gets right.
fn prune_node(node: &mut TreeNode, rows: &[usize], depth: usize, ctx: &mut PruneCtx) -> usize {
    let v = ctx.validation;
    let d = v.decisions();
    let TreeNode::Internal { attribute, children, counts } = node else {
        return rows.iter().filter(|&&r| d[r] == node.majority()).count();
    };
    let node_majority = majority(*counts);
    let mut routed: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    let mut subtree_correct = 0;
    for &r in rows {
        let value = v.rows()[r][*attribute];
        if children.contains_key(&value) {
            routed.entry(value).or_default().push(r);
        } else if d[r] == node_majority {
            subtree_correct += 1;
        }
    }
    for (value, child) in children.iter_mut() {
        let sub = routed.remove(value).unwrap_or_default();
        subtree_correct += prune_node(child, &sub, depth + 1, ctx);
    }
    let leaf_correct = rows.iter().filter(|&&r| d[r] == node_majority).count();
    if leaf_correct < subtree_correct {
        return subtree_correct;
    }
    let total = v.len() as f64;
    let before = *ctx.correct as f64 / total;
    *ctx.correct += leaf_correct as i64 - subtree_correct as i64;
    let after = *ctx.correct as f64 / total;
    debug_assert!(after >= before);
    ctx.trace.collapses.push(Collapse {
        attribute: ctx.attributes[*attribute].clone(),
        depth,
        accuracy_before: before,
        accuracy_after: after,
    });
    *node = TreeNode::leaf(*counts);
    leaf_correct
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeUsage {
    pub attribute: String,
    pub index: usize,
    /// Shallowest depth at which the attribute splits; the root is 0.
    pub min_depth: usize,
    pub splits: usize,
}

/// Attributes used as split nodes, ascending by column.
pub fn select_attributes(tree: &DecisionTree) -> ReductionResult {
    let mut usage: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    collect_usage(&tree.root, 0, &mut usage);
    let mut warnings = Vec::new();
    if usage.is_empty() {
        let msg = "decision tree is a single leaf, no attributes selected".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    ReductionResult {
        method: ReductionMethod::DecisionTree,
        attributes: tree.attributes.clone(),
        kept: usage.keys().copied().collect(),
        diagnostics: Diagnostics::Tree {
            usage: usage
                .into_iter()
                .map(|(index, (min_depth, splits))| AttributeUsage {
                    attribute: tree.attributes[index].clone(),
                    index,
                    min_depth,
                    splits,
                })
                .collect(),
        },
        warnings,
    }
}

fn collect_usage(node: &TreeNode, depth: usize, usage: &mut BTreeMap<usize, (usize, usize)>) {
    if let TreeNode::Internal { attribute, children, .. } = node {
        let entry = usage.entry(*attribute).or_insert((depth, 0));
        entry.0 = entry.0.min(depth);
        entry.1 += 1;
        for child in children.values() {
            collect_usage(child, depth + 1, usage);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtConfig {
    pub criterion: SplitCriterion,
    pub min_rows: usize,
    /// Share of rows held out for pruning.
    pub validation: f64,
}

impl Default for DtConfig {
    fn default() -> Self {
        DtConfig {
            criterion: SplitCriterion::GainRatio,
            min_rows: 2,
            validation: 0.15,
        }
    }
}

/// Build on a seeded training share, prune on the rest, select.
pub fn tree_reduce(table: &CategoricalTable, cfg: &DtConfig, seed: u64) -> Result<ReductionResult> {
    if !(0.0..1.0).contains(&cfg.validation) {
        return Err(Error::parameter("validation share must be in [0, 1)"));
    }
    let (grow_rows, val_rows) = if cfg.validation > 0.0 && table.len() >= 2 {
        let mut parts = ratio_split(table.len(), &[1.0 - cfg.validation, cfg.validation], seed)?;
        let val = parts.pop().expect("two groups");
        (parts.pop().expect("two groups"), val)
    } else {
        ((0..table.len()).collect(), Vec::new())
    };
    let tree = build_tree(&table.subset(&grow_rows), cfg.criterion, cfg.min_rows)?;
    let (pruned, trace) = prune_with_trace(&tree, &table.subset(&val_rows));
    let mut result = select_attributes(&pruned);
    result.warnings.splice(0..0, trace.warnings);
    Ok(result)
}
