use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::clock::Stopwatch;
use super::config::{Classifier, ExperimentConfig, Preprocessor};
use super::report::{CellReport, CellStatus, ExperimentReport};
use crate::dataset::{kfold, ratio_split, Discretizer, FoldPlan, Gas, GasTable, GAS_COUNT};
use crate::dtree::tree_reduce;
use crate::granular::{incremental_rank_reduce, incremental_rank_reduce_shuffled};
use crate::pca::{fit_pca, PcaProjection};
use crate::rnn::IntervalMap;
use crate::roughset::{reduct_search, InformationSystem};
use crate::rng::derive_seed;
use crate::samples::{IntervalSamples, Samples, Scaler};
use crate::svm::train_smo;
use crate::{bpnn, rnn, Error, ReductionResult, Result};

const FOLD_STREAM: u64 = 0;
const CLASSIFIER_STREAM: u64 = 1;
const REDUCER_STREAM: u64 = 2;
/// Fold counter used for the single whole-table fit of global mode.
const GLOBAL_FIT: u64 = u64::MAX;

/// A preprocessor fitted on some rows, ready to transform any table.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedPreprocessor {
    pub kind: Preprocessor,
    pub discretizer: Discretizer,
    /// Gas columns fed onward (all of them for `none` and `pca`).
    pub gases: Vec<usize>,
    pub pca: Option<PcaProjection>,
    /// Boxes for the rough network, fitted on the same rows.
    pub intervals: IntervalMap,
    pub label: Vec<String>,
    pub warnings: Vec<String>,
}

fn all_gases() -> Vec<usize> {
    (0..GAS_COUNT).collect()
}

fn select_codes(codes: &crate::CategoricalTable, gases: &[usize]) -> crate::CategoricalTable {
    codes.project(gases)
}

/// Kept gas indices of a reduction, falling back to every gas when the
/// reducer keeps nothing.
fn kept_or_all(result: &ReductionResult, warnings: &mut Vec<String>) -> Vec<usize> {
    if result.kept.is_empty() {
        warnings.push(format!("{:?} kept no attribute; using all attributes", result.method));
        all_gases()
    } else {
        result.kept.clone()
    }
}

pub fn fit_preprocessor(
    cfg: &ExperimentConfig,
    kind: Preprocessor,
    rows: &GasTable,
    seed: u64,
) -> Result<FittedPreprocessor> {
    let discretizer = Discretizer::fit(rows);
    let codes = discretizer.apply(rows);
    let mut warnings = Vec::new();
    let mut pca = None;
    let gases = match kind {
        Preprocessor::None => all_gases(),
        Preprocessor::Pca => {
            let projection = fit_pca(&rows.to_samples(), cfg.pca.policy)?;
            pca = Some(projection);
            all_gases()
        }
        Preprocessor::Rs => match reduct_search(&InformationSystem::new(&codes)) {
            Ok(r) => {
                warnings.extend(r.warnings.iter().cloned());
                kept_or_all(&r, &mut warnings)
            }
            Err(Error::DependencyDegenerate) => {
                warnings.push("rough-set dependency is zero; using all attributes".into());
                all_gases()
            }
            Err(e) => return Err(e),
        },
        Preprocessor::Gr => {
            let result = if cfg.gr.shuffle {
                incremental_rank_reduce_shuffled(&codes, cfg.gr.chunk, cfg.gr.carry, seed)
            } else {
                incremental_rank_reduce(&codes, cfg.gr.chunk, cfg.gr.carry)
            };
            match result {
                Ok(r) => {
                    warnings.extend(r.warnings.iter().cloned());
                    kept_or_all(&r, &mut warnings)
                }
                Err(Error::DependencyDegenerate) => {
                    warnings.push("granular dependency is zero; using all attributes".into());
                    all_gases()
                }
                Err(e) => return Err(e),
            }
        }
        Preprocessor::Dt => {
            let r = tree_reduce(&codes, &cfg.dt, seed)?;
            warnings.extend(r.warnings.iter().cloned());
            kept_or_all(&r, &mut warnings)
        }
    };
    let label = match &pca {
        Some(p) => p.reduction().label(),
        None => gases.iter().map(|&g| Gas::ALL[g].name().to_string()).collect(),
    };
    let values = rows.select(&gases);
    let intervals = IntervalMap::fit(&select_codes(&codes, &gases), &values)?;
    Ok(FittedPreprocessor {
        kind,
        discretizer,
        gases,
        pca,
        intervals,
        label,
        warnings,
    })
}

impl FittedPreprocessor {
    /// Classifier inputs before standardization.
    pub fn points(&self, table: &GasTable) -> Result<Samples> {
        match (&self.pca, self.kind) {
            (Some(p), _) => p.project(&table.to_samples()),
            (None, Preprocessor::Dt) => Ok(select_codes(&self.discretizer.apply(table), &self.gases).to_samples()),
            (None, _) => Ok(table.select(&self.gases)),
        }
    }

    /// Rough-network boxes before standardization. Category codes carry no
    /// spread, so the tree reducer yields degenerate boxes.
    pub fn boxes(&self, table: &GasTable) -> Result<IntervalSamples> {
        if self.kind == Preprocessor::Dt {
            return Ok(IntervalSamples::from_points(&self.points(table)?));
        }
        let codes = select_codes(&self.discretizer.apply(table), &self.gases);
        let raw = self.intervals.apply(&codes, &table.select(&self.gases))?;
        match &self.pca {
            Some(p) => p.project_intervals(&raw),
            None => Ok(raw),
        }
    }
}

/// One fold's outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub accuracy: f64,
    pub seconds: f64,
    pub stop: Option<String>,
    pub warnings: Vec<String>,
}

fn fold_error(fold: usize, stage: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| Error::Fold {
        fold,
        stage,
        source: Box::new(e),
    }
}

/// Splits fold-training rows into train and validation shares following
/// the configured train/validation ratio.
fn inner_split(n: usize, cfg: &ExperimentConfig, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let s = &cfg.bpnn.split;
    let total = s.train + s.val;
    let mut parts = ratio_split(n, &[s.train / total, s.val / total], seed)?;
    let val = parts.pop().expect("two groups");
    Ok((parts.pop().expect("two groups"), val))
}

fn train_and_test(
    cfg: &ExperimentConfig,
    clf: Classifier,
    fitted: &FittedPreprocessor,
    train_rows: &GasTable,
    test_rows: &GasTable,
    seed: u64,
) -> Result<FoldOutcome> {
    let train_pts = fitted.points(train_rows)?;
    let test_pts = fitted.points(test_rows)?;
    let scaler = Scaler::fit(train_pts.rows())?;
    let train_z = scaler.transform(&train_pts)?;
    let test_z = scaler.transform(&test_pts)?;
    let mut warnings = Vec::new();
    let (accuracy, seconds, stop) = match clf {
        Classifier::Bpnn => {
            let mlp_cfg = crate::MlpConfig {
                seed,
                ..cfg.bpnn.clone()
            };
            let (tr, va) = inner_split(train_z.len(), cfg, derive_seed(seed, &[1]))?;
            let watch = Stopwatch::start();
            let model = bpnn::train_with_split(&train_z.subset(&tr), &train_z.subset(&va), &mlp_cfg)?;
            let seconds = watch.seconds();
            let stop = model.trace.as_ref().map(|t| t.stop.to_string());
            (model.evaluate(&test_z)?.accuracy, seconds, stop)
        }
        Classifier::Svm => {
            let svm_cfg = crate::svm::SvmConfig {
                seed,
                ..cfg.svm.clone()
            };
            let watch = Stopwatch::start();
            let model = train_smo(&train_z, &svm_cfg)?;
            let seconds = watch.seconds();
            if model.trace.as_ref().is_some_and(|t| !t.converged) {
                warnings.push("svm did not converge within max_passes".to_string());
            }
            (model.evaluate(&test_z)?.accuracy, seconds, None)
        }
        Classifier::Rnn => {
            let mlp_cfg = crate::MlpConfig {
                seed,
                ..cfg.bpnn.clone()
            };
            let train_box = scaler.transform_intervals(&fitted.boxes(train_rows)?)?;
            let test_box = scaler.transform_intervals(&fitted.boxes(test_rows)?)?;
            let (tr, va) = inner_split(train_box.len(), cfg, derive_seed(seed, &[1]))?;
            let watch = Stopwatch::start();
            let model = rnn::train_with_split(&train_box.subset(&tr), &train_box.subset(&va), &mlp_cfg, &cfg.rnn)?;
            let seconds = watch.seconds();
            warnings.extend(model.warnings.iter().cloned());
            let stop = model.trace.as_ref().map(|t| t.stop.to_string());
            (model.evaluate(&test_box)?.accuracy, seconds, stop)
        }
    };
    Ok(FoldOutcome {
        fold: 0,
        accuracy,
        seconds,
        stop,
        warnings,
    })
}

/// Cross-validation folds for a classifier; shared by every preprocessor.
pub fn fold_plan(cfg: &ExperimentConfig, table: &GasTable, clf: Classifier) -> Result<FoldPlan> {
    let k = cfg.folds.for_classifier(clf);
    kfold(table.decisions(), k, derive_seed(cfg.seed, &[FOLD_STREAM, k as u64]))
}

fn reducer_seed(cfg: &ExperimentConfig, pre: Preprocessor, fold: u64) -> u64 {
    derive_seed(cfg.seed, &[REDUCER_STREAM, pre.index(), fold])
}

/// The preprocessor a fold trains with: refitted on the fold's training
/// rows in strict mode, fitted once on the whole table otherwise.
pub fn fold_preprocessor(
    cfg: &ExperimentConfig,
    table: &GasTable,
    pre: Preprocessor,
    plan: &FoldPlan,
    fold: usize,
) -> Result<FittedPreprocessor> {
    if cfg.strict {
        let rows = table.subset(&plan.train_rows(fold));
        fit_preprocessor(cfg, pre, &rows, reducer_seed(cfg, pre, fold as u64))
    } else {
        fit_preprocessor(cfg, pre, table, reducer_seed(cfg, pre, GLOBAL_FIT))
    }
}

/// Per-fold outcomes of one cell, and the preprocessor labels seen.
pub fn run_folds(
    cfg: &ExperimentConfig,
    table: &GasTable,
    pre: Preprocessor,
    clf: Classifier,
) -> Result<(Vec<FoldOutcome>, Vec<FittedPreprocessor>)> {
    let plan = fold_plan(cfg, table, clf)?;
    let global = if cfg.strict {
        None
    } else {
        Some(fold_preprocessor(cfg, table, pre, &plan, 0).map_err(fold_error(0, "preprocess"))?)
    };
    let mut outcomes = Vec::with_capacity(plan.k);
    let mut fits = Vec::new();
    for fold in 0..plan.k {
        let fitted = match &global {
            Some(g) => g.clone(),
            None => fold_preprocessor(cfg, table, pre, &plan, fold).map_err(fold_error(fold, "preprocess"))?,
        };
        let train_rows = table.subset(&plan.train_rows(fold));
        let test_rows = table.subset(&plan.test_rows(fold));
        let seed = derive_seed(cfg.seed, &[CLASSIFIER_STREAM, clf.index(), fold as u64]);
        let mut outcome = train_and_test(cfg, clf, &fitted, &train_rows, &test_rows, seed)
            .map_err(fold_error(fold, clf.as_str()))?;
        outcome.fold = fold;
        outcomes.push(outcome);
        if global.is_none() || fits.is_empty() {
            fits.push(fitted);
        }
    }
    Ok((outcomes, fits))
}

fn push_unique(list: &mut Vec<String>, item: &str) {
    if !list.iter().any(|w| w == item) {
        list.push(item.to_string());
    }
}

fn summarize(pre: Preprocessor, clf: Classifier, outcomes: &[FoldOutcome], fits: &[FittedPreprocessor]) -> CellReport {
    let n = outcomes.len() as f64;
    let accuracy = outcomes.iter().map(|o| o.accuracy).sum::<f64>() / n;
    let var = outcomes.iter().map(|o| (o.accuracy - accuracy).powi(2)).sum::<f64>() / n;
    let mut stops = BTreeMap::new();
    for stop in outcomes.iter().filter_map(|o| o.stop.as_ref()) {
        *stops.entry(stop.clone()).or_insert(0) += 1;
    }
    let mut warnings = Vec::new();
    for w in fits.iter().flat_map(|f| &f.warnings).chain(outcomes.iter().flat_map(|o| &o.warnings)) {
        push_unique(&mut warnings, w);
    }
    let mut kept: Vec<String> = Vec::new();
    for f in fits {
        for name in &f.label {
            push_unique(&mut kept, name);
        }
    }
    if fits.windows(2).any(|w| w[0].label != w[1].label) {
        push_unique(&mut warnings, "kept attributes differ between folds; listing their union");
        kept.sort_by_key(|name| Gas::from_name(name).map_or(usize::MAX, Gas::index));
    }
    CellReport {
        preprocessor: pre,
        classifier: clf,
        status: CellStatus::Ok,
        folds: outcomes.len(),
        accuracy,
        accuracy_std: var.sqrt(),
        seconds: outcomes.iter().map(|o| o.seconds).sum::<f64>() / n,
        kept,
        stops,
        warnings,
        error: None,
        fold_accuracy: outcomes.iter().map(|o| o.accuracy).collect(),
    }
}

pub fn run_cell(cfg: &ExperimentConfig, table: &GasTable, pre: Preprocessor, clf: Classifier) -> Result<CellReport> {
    let (outcomes, fits) = run_folds(cfg, table, pre, clf)?;
    let cell = summarize(pre, clf, &outcomes, &fits);
    log::info!(
        "{pre}-{clf}: {:.1}% over {} folds, {:.2}s",
        cell.accuracy,
        cell.folds,
        cell.seconds
    );
    Ok(cell)
}

/// Every requested cell in canonical order. A failing cell becomes a
/// failed row instead of aborting the matrix.
pub fn run_matrix(cfg: &ExperimentConfig, table: &GasTable) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cells = cfg
        .cells()
        .into_iter()
        .map(|(pre, clf)| {
            run_cell(cfg, table, pre, clf).unwrap_or_else(|e| {
                log::error!("{pre}-{clf} failed: {e}");
                CellReport::failed(pre, clf, cfg.folds.for_classifier(clf), e.to_string())
            })
        })
        .collect();
    Ok(ExperimentReport {
        seed: cfg.seed,
        strict: cfg.strict,
        rows: table.len(),
        cells,
    })
}
