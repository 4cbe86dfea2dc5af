use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{Classifier, Preprocessor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One preprocessor/classifier cell averaged over its folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub preprocessor: Preprocessor,
    pub classifier: Classifier,
    pub status: CellStatus,
    pub folds: usize,
    /// Mean held-out accuracy, percent.
    pub accuracy: f64,
    pub accuracy_std: f64,
    /// Mean training time per fold, in thread CPU seconds where available.
    pub seconds: f64,
    /// Gas names fed to the classifier, or `pca:p=N`.
    pub kept: Vec<String>,
    pub stops: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    pub fold_accuracy: Vec<f64>,
}

impl CellReport {
    pub fn failed(preprocessor: Preprocessor, classifier: Classifier, folds: usize, error: String) -> CellReport {
        CellReport {
            preprocessor,
            classifier,
            status: CellStatus::Failed,
            folds,
            accuracy: 0.0,
            accuracy_std: 0.0,
            seconds: 0.0,
            kept: Vec::new(),
            stops: BTreeMap::new(),
            warnings: Vec::new(),
            error: Some(error),
            fold_accuracy: Vec::new(),
        }
    }

    /// `NONE-BPNN` style cell name.
    pub fn label(&self) -> String {
        format!("{}-{}", self.preprocessor, self.classifier).to_uppercase()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub strict: bool,
    pub rows: usize,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| c.status == CellStatus::Failed)
    }

    pub fn cell(&self, pre: Preprocessor, clf: Classifier) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.preprocessor == pre && c.classifier == clf)
    }

    pub fn from_json(text: &str) -> Result<ExperimentReport> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::Config(format!("unknown report format '{s}' (table, json, csv)"))),
        }
    }
}

pub fn table_row(cell: &CellReport) -> String {
    let label = cell.label();
    match cell.status {
        CellStatus::Ok => format!(
            "{label:<10}{:>8}  {:>5.1}  {:.2}  {}",
            cell.folds,
            cell.accuracy,
            cell.seconds,
            cell.kept.join(",")
        ),
        CellStatus::Failed => format!(
            "{label:<10}{:>8}  failed: {}",
            cell.folds,
            cell.error.as_deref().unwrap_or("unknown error")
        ),
    }
}

fn emit_table(r: &ExperimentReport) -> String {
    let mut out = format!("{:<10}{:>8}  {:>5}  {}  {}\n", "cell", "folds", "acc%", "time(s)", "kept");
    for cell in &r.cells {
        out.push_str(&table_row(cell));
        out.push('\n');
    }
    for cell in &r.cells {
        for w in &cell.warnings {
            let _ = writeln!(out, "warning {}: {w}", cell.label());
        }
    }
    out
}

fn emit_csv(r: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "preprocessor",
        "classifier",
        "status",
        "folds",
        "accuracy",
        "accuracy_std",
        "seconds",
        "kept",
        "stops",
        "warnings",
        "error",
    ])?;
    for c in &r.cells {
        let stops = c
            .stops
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            c.preprocessor.as_str().to_string(),
            c.classifier.as_str().to_string(),
            format!("{:?}", c.status).to_lowercase(),
            c.folds.to_string(),
            format!("{:.1}", c.accuracy),
            format!("{:.1}", c.accuracy_std),
            format!("{:.2}", c.seconds),
            c.kept.join(";"),
            stops,
            c.warnings.join(";"),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_report(r: &ExperimentReport, format: ReportFormat) -> Result<String> {
    if r.cells.is_empty() {
        return Err(Error::parameter("report has no cells"));
    }
    match format {
        ReportFormat::Table => Ok(emit_table(r)),
        ReportFormat::Json => Ok(serde_json::to_string_pretty(r)? + "\n"),
        ReportFormat::Csv => emit_csv(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut cell = CellReport::failed(Preprocessor::None, Classifier::Bpnn, 15, String::new());
        cell.status = CellStatus::Ok;
        cell.error = None;
        cell.accuracy = 91.6;
        cell.seconds = 59.93;
        cell.kept = vec!["ethylene".into(), "hydrogen".into()];
        cell.stops.insert("early-stop".into(), 15);
        cell.warnings.push("something odd".into());
        cell.fold_accuracy = vec![91.6; 15];
        let failed = CellReport::failed(Preprocessor::Dt, Classifier::Svm, 8, "svm failed on fold 2: x".into());
        ExperimentReport {
            seed: 1,
            strict: false,
            rows: 100,
            cells: vec![cell, failed],
        }
    }

    #[test]
    fn table_row_layout() {
        let r = sample();
        let text = emit_report(&r, ReportFormat::Table).unwrap();
        assert!(table_row(&r.cells[0]).contains("91.6  59.93"));
        assert!(text.contains("NONE-BPNN"));
        assert!(text.contains("DT-SVM"));
        assert!(text.contains("failed: svm failed on fold 2"));
        assert!(text.contains("warning NONE-BPNN: something odd"));
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let text = emit_report(&r, ReportFormat::Json).unwrap();
        assert_eq!(ExperimentReport::from_json(&text).unwrap(), r);
    }

    #[test]
    fn csv_has_every_field() {
        let text = emit_report(&sample(), ReportFormat::Csv).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap().len(), 11);
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(&rows[0][4], "91.6");
        assert_eq!(&rows[0][6], "59.93");
        assert_eq!(&rows[0][8], "early-stop=15");
        assert_eq!(&rows[1][2], "failed");
    }

    #[test]
    fn empty_report_is_rejected() {
        let r = ExperimentReport {
            cells: Vec::new(),
            ..sample()
        };
        assert!(matches!(emit_report(&r, ReportFormat::Json), Err(Error::Parameter(_))));
    }
}
