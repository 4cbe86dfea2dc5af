//! Granular computing over a discretized table.
//!
//! A granule is an equivalence class of rows sharing one condition pattern,
//! summarised by its positive (`count_t`, decision 1) and negative
//! (`count_f`, decision 0) sample counts. Its rough membership is the
//! positive proportion and its ranking value is
//! `count_t * proportion = count_t² / (count_t + count_f)`.
//!
//! [`incremental_rank_reduce`] walks the table in consecutive chunks,
//! carrying the best-ranked granules of each later chunk into the
//! accumulated set, then reduces attributes on the accumulated granules.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoricalTable, FAULTY, HEALTHY};
use crate::reduction::{Diagnostics, ReductionMethod, ReductionResult};
use crate::rng::seeded;
use crate::roughset::{reduct_search, InformationSystem, ReductTrace};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GranuleRegion {
    Positive,
    Boundary,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Granule {
    pub pattern: Vec<u8>,
    pub count_t: u64,
    pub count_f: u64,
}

impl Granule {
    pub fn size(&self) -> u64 {
        self.count_t + self.count_f
    }

    /// Rough membership of the granule in the healthy class.
    pub fn proportion(&self) -> f64 {
        self.count_t as f64 / self.size() as f64
    }

    pub fn rank(&self) -> f64 {
        self.count_t as f64 * self.proportion()
    }

    pub fn region(&self) -> GranuleRegion {
        match (self.count_t, self.count_f) {
            (_, 0) => GranuleRegion::Positive,
            (0, _) => GranuleRegion::Negative,
            _ => GranuleRegion::Boundary,
        }
    }
}

/// Granules keyed by pattern over a fixed attribute list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GranuleSet {
    attributes: Vec<String>,
    granules: BTreeMap<Vec<u8>, Granule>,
}

impl GranuleSet {
    pub fn empty(attributes: Vec<String>) -> GranuleSet {
        GranuleSet {
            attributes,
            granules: BTreeMap::new(),
        }
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.granules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.granules.is_empty()
    }

    /// Granules in pattern order.
    pub fn granules(&self) -> impl Iterator<Item = &Granule> {
        self.granules.values()
    }

    pub fn get(&self, pattern: &[u8]) -> Option<&Granule> {
        self.granules.get(pattern)
    }

    /// Total rows represented.
    pub fn absorbed(&self) -> u64 {
        self.granules.values().map(Granule::size).sum()
    }

    fn insert(&mut self, g: Granule) {
        match self.granules.get_mut(&g.pattern) {
            Some(existing) => {
                existing.count_t += g.count_t;
                existing.count_f += g.count_f;
            }
            None => {
                self.granules.insert(g.pattern.clone(), g);
            }
        }
    }

    /// Set holding only `granules`, over the same attributes.
    pub fn with_granules(&self, granules: impl IntoIterator<Item = Granule>) -> GranuleSet {
        let mut out = GranuleSet::empty(self.attributes.clone());
        for g in granules {
            out.insert(g);
        }
        out
    }

    /// Weighted decision table: one row per granule labelled with its
    /// majority decision and weighted by its size. Granules with equal
    /// counts become two rows, one per class, so the conflict survives.
    pub fn to_information_system(&self) -> Result<InformationSystem> {
        let mut rows = Vec::new();
        let mut decisions = Vec::new();
        let mut weights = Vec::new();
        for g in self.granules.values() {
            if g.count_t == g.count_f {
                for d in [FAULTY, HEALTHY] {
                    rows.push(g.pattern.clone());
                    decisions.push(d);
                    weights.push(g.count_t);
                }
            } else {
                rows.push(g.pattern.clone());
                decisions.push(if g.count_t > g.count_f { HEALTHY } else { FAULTY });
                weights.push(g.size());
            }
        }
        let table = CategoricalTable::new(self.attributes.clone(), rows, decisions)?;
        InformationSystem::weighted(&table, weights)
    }

    /// Text dump, one granule per line.
    pub fn dump(&self) -> String {
        let mut out = String::from("pattern,count_t,count_f,proportion,rank\n");
        for g in self.granules.values() {
            let pattern: Vec<String> = g.pattern.iter().map(u8::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                pattern.join(" "),
                g.count_t,
                g.count_f,
                g.proportion(),
                g.rank()
            );
        }
        out
    }
}

pub fn granulate(chunk: &CategoricalTable) -> Result<GranuleSet> {
    if chunk.is_empty() {
        return Err(Error::parameter("cannot granulate an empty chunk"));
    }
    let mut set = GranuleSet::empty(chunk.attributes().to_vec());
    for (row, &d) in chunk.rows().iter().zip(chunk.decisions()) {
        let healthy = u64::from(d == HEALTHY);
        set.insert(Granule {
            pattern: row.clone(),
            count_t: healthy,
            count_f: 1 - healthy,
        });
    }
    Ok(set)
}

/// Merges `new` into `base`: matching patterns add counts, others are
/// inserted.
pub fn combine(base: &GranuleSet, new: &GranuleSet) -> Result<GranuleSet> {
    if base.attributes != new.attributes {
        return Err(Error::Schema(format!(
            "granule attribute lists differ: {:?} vs {:?}",
            base.attributes, new.attributes
        )));
    }
    let mut out = base.clone();
    for g in new.granules.values() {
        out.insert(g.clone());
    }
    Ok(out)
}

/// The `n` best granules: rank descending, then `count_t` descending, then
/// pattern ascending.
pub fn top_ranked(set: &GranuleSet, n: usize) -> Vec<Granule> {
    let mut all: Vec<Granule> = set.granules.values().cloned().collect();
    all.sort_by(|a, b| {
        b.rank()
            .total_cmp(&a.rank())
            .then(b.count_t.cmp(&a.count_t))
            .then_with(|| a.pattern.cmp(&b.pattern))
    });
    all.truncate(n);
    all
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularSummary {
    pub chunks: usize,
    pub granules: usize,
    pub absorbed_rows: u64,
    pub total_rows: usize,
    pub reduct: ReductTrace,
}

/// Accumulated granule set after the chunked ranking pass.
pub fn accumulate(table: &CategoricalTable, chunk_size: usize, carry: usize) -> Result<(GranuleSet, usize)> {
    if chunk_size == 0 || carry == 0 {
        return Err(Error::parameter("chunk size and carry must be >= 1"));
    }
    if table.is_empty() {
        return Err(Error::parameter("cannot rank an empty table"));
    }
    let indices: Vec<usize> = (0..table.len()).collect();
    let mut chunks = indices.chunks(chunk_size);
    let first = chunks.next().expect("non-empty table");
    let mut acc = granulate(&table.subset(first))?;
    let mut count = 1;
    for chunk in chunks {
        let g = granulate(&table.subset(chunk))?;
        let best = acc.with_granules(top_ranked(&g, carry));
        acc = combine(&acc, &best)?;
        count += 1;
    }
    Ok((acc, count))
}

/// Incremental granular ranking followed by a rough-set reduct on the
/// accumulated granules.
pub fn incremental_rank_reduce(
    table: &CategoricalTable,
    chunk_size: usize,
    carry: usize,
) -> Result<ReductionResult> {
    let (acc, chunks) = accumulate(table, chunk_size, carry)?;
    let reduct = reduct_search(&acc.to_information_system()?)?;
    let Diagnostics::RoughSet(trace) = reduct.diagnostics else {
        unreachable!("reduct_search reports rough-set diagnostics");
    };
    let mut warnings = Vec::new();
    if acc.absorbed() < table.len() as u64 {
        warnings.push(format!(
            "granular ranking kept {} of {} rows",
            acc.absorbed(),
            table.len()
        ));
    }
    Ok(ReductionResult {
        method: ReductionMethod::Granular,
        attributes: reduct.attributes,
        kept: reduct.kept,
        diagnostics: Diagnostics::Granular(GranularSummary {
            chunks,
            granules: acc.len(),
            absorbed_rows: acc.absorbed(),
            total_rows: table.len(),
            reduct: trace,
        }),
        warnings,
    })
}

/// As [`incremental_rank_reduce`] after a seeded permutation of the rows.
pub fn incremental_rank_reduce_shuffled(
    table: &CategoricalTable,
    chunk_size: usize,
    carry: usize,
    seed: u64,
) -> Result<ReductionResult> {
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.shuffle(&mut seeded(seed));
    incremental_rank_reduce(&table.subset(&order), chunk_size, carry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: Vec<Vec<u8>>, d: Vec<u8>) -> CategoricalTable {
        CategoricalTable::from_rows(rows, d).unwrap()
    }

    fn granule(pattern: &[u8], t: u64, f: u64) -> Granule {
        Granule {
            pattern: pattern.to_vec(),
            count_t: t,
            count_f: f,
        }
    }

    #[test]
    fn granulate_counts_pattern() {
        let t = table(vec![vec![2, 3]; 4], vec![1, 1, 1, 0]);
        let g = granulate(&t).unwrap();
        assert_eq!(g.len(), 1);
        let only = g.get(&[2, 3]).unwrap();
        assert_eq!((only.count_t, only.count_f), (3, 1));
        assert_eq!(only.proportion(), 0.75);
        assert_eq!(only.rank(), 2.25);
        assert_eq!(only.region(), GranuleRegion::Boundary);
    }

    #[test]
    fn all_faulty_ranks_zero_all_distinct_healthy_rank_one() {
        let faulty = granulate(&table(vec![vec![1], vec![2], vec![2]], vec![0, 0, 0])).unwrap();
        assert!(faulty.granules().all(|g| g.rank() == 0.0));
        let healthy = granulate(&table(vec![vec![1], vec![2], vec![3]], vec![1, 1, 1])).unwrap();
        assert!(healthy.granules().all(|g| g.rank() == 1.0));
    }

    #[test]
    fn combine_updates_counts() {
        let attrs = vec!["a1".to_string()];
        let base = GranuleSet::empty(attrs.clone()).with_granules([granule(&[7], 2, 1)]);
        let new = GranuleSet::empty(attrs.clone()).with_granules([granule(&[7], 1, 0)]);
        let merged = combine(&base, &new).unwrap();
        let p = merged.get(&[7]).unwrap();
        assert_eq!((p.count_t, p.count_f), (3, 1));
        assert_eq!(p.proportion(), 0.75);
        assert_eq!(p.rank(), 2.25);
        assert_eq!(combine(&base, &GranuleSet::empty(attrs)).unwrap(), base);
    }

    #[test]
    fn combine_rejects_other_attributes() {
        let a = GranuleSet::empty(vec!["a1".into()]);
        let b = GranuleSet::empty(vec!["a2".into()]);
        assert!(matches!(combine(&a, &b), Err(Error::Schema(_))));
    }

    #[test]
    fn ranking_order() {
        let set = GranuleSet::empty(vec!["a".into()]).with_granules([
            granule(&[1], 3, 1),
            granule(&[2], 1, 0),
            granule(&[3], 0, 4),
            granule(&[4], 2, 2),
        ]);
        assert_eq!(top_ranked(&set, 1)[0].pattern, vec![1]);
        // rank 1.0 for both [2] (1,0) and [4] (2,2); larger count_t first
        let order: Vec<Vec<u8>> = top_ranked(&set, 10).into_iter().map(|g| g.pattern).collect();
        assert_eq!(order, vec![vec![1], vec![4], vec![2], vec![3]]);
    }

    #[test]
    fn expansion_keeps_ties_as_conflicts() {
        let set = GranuleSet::empty(vec!["a".into()])
            .with_granules([granule(&[1], 2, 2), granule(&[2], 3, 1)]);
        let is = set.to_information_system().unwrap();
        assert_eq!(is.table().len(), 3);
        assert_eq!(is.weights(), &[2, 2, 4]);
        let dep = crate::roughset::degree_of_dependency(&is, &[0]).unwrap();
        assert_eq!((dep.positive, dep.total), (4, 8));
    }

    #[test]
    fn single_chunk_matches_direct_reduct() {
        let rows: Vec<Vec<u8>> = (0..30u8).map(|i| vec![i % 3 + 1, i % 2 + 1, i % 5 + 1]).collect();
        let d: Vec<u8> = rows.iter().map(|r| (r[1] == 2) as u8).collect();
        let t = table(rows, d);
        let inc = incremental_rank_reduce(&t, 100, 1).unwrap();
        let direct = reduct_search(&granulate(&t).unwrap().to_information_system().unwrap()).unwrap();
        assert_eq!(inc.kept, direct.kept);
        assert_eq!(inc.kept, vec![1]);
    }

    #[test]
    fn chunked_copy_of_decision_keeps_it() {
        let rows: Vec<Vec<u8>> = (0..60u32)
            .map(|i| vec![(i * 7 % 2) as u8 + 1, (i % 3) as u8 + 1, (i * 5 % 4) as u8 + 1])
            .collect();
        let d: Vec<u8> = rows.iter().map(|r| r[0] - 1).collect();
        let result = incremental_rank_reduce(&table(rows, d), 10, 1).unwrap();
        assert_eq!(result.kept, vec![0]);
        assert!(!result.warnings.is_empty());
    }

    #[test]
    fn full_carry_equals_single_chunk() {
        let rows: Vec<Vec<u8>> = (0..48u32)
            .map(|i| vec![(i % 2) as u8 + 1, (i / 2 % 3) as u8 + 1, (i / 6 % 2) as u8 + 1])
            .collect();
        let d: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[2] > 2)).collect();
        let t = table(rows, d);
        let (whole, _) = accumulate(&t, 1000, 1).unwrap();
        let (chunked, chunks) = accumulate(&t, 12, 1000).unwrap();
        assert_eq!(chunks, 4);
        assert_eq!(whole, chunked);
    }

    #[test]
    fn dump_lists_every_granule() {
        let set = GranuleSet::empty(vec!["a".into(), "b".into()]).with_granules([granule(&[1, 2], 3, 1)]);
        assert_eq!(set.dump(), "pattern,count_t,count_f,proportion,rank\n1 2,3,1,0.75,2.25\n");
    }

    fn rows_strategy() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<u8>)> {
        (2usize..=20).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(1u8..=2, 3), n),
                prop::collection::vec(0u8..2, n),
            )
        })
    }

    proptest! {
        #[test]
        fn combine_of_parts_equals_whole((rows, d) in rows_strategy(), mask in any::<u32>()) {
            let t = table(rows, d);
            let (left, right): (Vec<usize>, Vec<usize>) =
                (0..t.len()).partition(|i| mask & (1 << i) != 0);
            prop_assume!(!left.is_empty() && !right.is_empty());
            let a = granulate(&t.subset(&left)).unwrap();
            let b = granulate(&t.subset(&right)).unwrap();
            let whole = granulate(&t).unwrap();
            prop_assert_eq!(&combine(&a, &b).unwrap(), &whole);
            prop_assert_eq!(&combine(&b, &a).unwrap(), &whole);
            prop_assert_eq!(whole.absorbed(), t.len() as u64);
            for g in whole.granules() {
                let exact = (g.count_t * g.count_t) as f64 / g.size() as f64;
                prop_assert!((g.rank() - exact).abs() <= 1e-12);
                match g.region() {
                    GranuleRegion::Positive => prop_assert!(1.0 <= g.rank() && g.rank() <= g.count_t as f64),
                    GranuleRegion::Negative => prop_assert_eq!(g.rank(), 0.0),
                    GranuleRegion::Boundary => prop_assert!(0.0 < g.rank() && g.rank() < g.count_t as f64),
                }
            }
        }

        #[test]
        fn combine_is_associative(
            (rows, d) in rows_strategy(),
            cut1 in 0usize..20,
            cut2 in 0usize..20,
        ) {
            let t = table(rows, d);
            let n = t.len();
            let (c1, c2) = (cut1.min(n), cut2.min(n));
            let (lo, hi) = (c1.min(c2), c1.max(c2));
            let part = |r: std::ops::Range<usize>| {
                let idx: Vec<usize> = r.collect();
                if idx.is_empty() {
                    GranuleSet::empty(t.attributes().to_vec())
                } else {
                    granulate(&t.subset(&idx)).unwrap()
                }
            };
            let (a, b, c) = (part(0..lo), part(lo..hi), part(hi..n));
            let left = combine(&combine(&a, &b).unwrap(), &c).unwrap();
            let right = combine(&a, &combine(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn rank_is_monotone_in_counts(t in 1u64..200, f in 0u64..200) {
            let g = granule(&[1], t, f);
            prop_assert!(granule(&[1], t + 1, f).rank() > g.rank());
            prop_assert!(granule(&[1], t, f + 1).rank() < g.rank());
        }
    }
}
