use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, Gas, GasTable, SynthSpec};
use crate::dtree::DtConfig;
use crate::pca::ComponentPolicy;
use crate::rnn::RnnOptions;
use crate::svm::SvmConfig;
use crate::{Error, MlpConfig, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessor {
    None,
    Pca,
    Rs,
    Gr,
    Dt,
}

impl Preprocessor {
    pub const ALL: [Preprocessor; 5] = [
        Preprocessor::None,
        Preprocessor::Pca,
        Preprocessor::Rs,
        Preprocessor::Gr,
        Preprocessor::Dt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preprocessor::None => "none",
            Preprocessor::Pca => "pca",
            Preprocessor::Rs => "rs",
            Preprocessor::Gr => "gr",
            Preprocessor::Dt => "dt",
        }
    }

    pub(crate) fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Preprocessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preprocessor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preprocessor::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown preprocessor '{s}' (none, pca, rs, gr, dt)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Bpnn,
    Svm,
    Rnn,
}

impl Classifier {
    pub const ALL: [Classifier; 3] = [Classifier::Bpnn, Classifier::Svm, Classifier::Rnn];

    pub fn as_str(self) -> &'static str {
        match self {
            Classifier::Bpnn => "bpnn",
            Classifier::Svm => "svm",
            Classifier::Rnn => "rnn",
        }
    }

    pub(crate) fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Classifier::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown classifier '{s}' (bpnn, svm, rnn)")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    #[default]
    Synth,
    Csv,
}

/// Where the gas table comes from. Synthetic fields are ignored for CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: SourceKind,
    pub path: Option<PathBuf>,
    pub rows: usize,
    pub fault_ratio: f64,
    pub noise: f64,
    /// Defaults to the experiment seed.
    pub seed: Option<u64>,
    pub informative: Option<Vec<Gas>>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: SourceKind::Synth,
            path: None,
            rows: 2000,
            fault_ratio: 0.5,
            noise: 0.2,
            seed: None,
            informative: None,
        }
    }
}

impl DataConfig {
    pub fn synth_spec(&self, experiment_seed: u64) -> SynthSpec {
        SynthSpec {
            rows: self.rows,
            fault_ratio: self.fault_ratio,
            noise: self.noise,
            seed: self.seed.unwrap_or(experiment_seed),
            informative: self.informative.clone(),
        }
    }

    /// Loads or generates the table. Relative CSV paths resolve against `base`.
    pub fn load(&self, experiment_seed: u64, base: Option<&Path>) -> Result<GasTable> {
        match self.source {
            SourceKind::Synth => self.synth_spec(experiment_seed).generate(),
            SourceKind::Csv => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("data.source = \"csv\" needs data.path".into()))?;
                let path = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let report = load_csv(&path)?;
                if report.dropped > 0 {
                    log::info!("dropped {} incomplete rows from {}", report.dropped, path.display());
                }
                Ok(report.table)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldConfig {
    pub bpnn: usize,
    pub svm: usize,
    pub rnn: usize,
}

impl Default for FoldConfig {
    fn default() -> Self {
        FoldConfig {
            bpnn: 15,
            svm: 8,
            rnn: 15,
        }
    }
}

impl FoldConfig {
    pub fn for_classifier(&self, c: Classifier) -> usize {
        match c {
            Classifier::Bpnn => self.bpnn,
            Classifier::Svm => self.svm,
            Classifier::Rnn => self.rnn,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub policy: ComponentPolicy,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            policy: ComponentPolicy::FixedCount(3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GranularConfig {
    pub chunk: usize,
    pub carry: usize,
    /// Shuffle rows before chunking.
    pub shuffle: bool,
}

impl Default for GranularConfig {
    fn default() -> Self {
        GranularConfig {
            chunk: 500,
            carry: 64,
            shuffle: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Refit every preprocessor on each training fold instead of once on
    /// the whole table.
    pub strict: bool,
    pub preprocessors: Vec<Preprocessor>,
    pub classifiers: Vec<Classifier>,
    pub data: DataConfig,
    pub folds: FoldConfig,
    pub bpnn: MlpConfig,
    pub rnn: RnnOptions,
    pub svm: SvmConfig,
    pub pca: PcaConfig,
    pub gr: GranularConfig,
    pub dt: DtConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            strict: false,
            preprocessors: Preprocessor::ALL.to_vec(),
            classifiers: Classifier::ALL.to_vec(),
            data: DataConfig::default(),
            folds: FoldConfig::default(),
            bpnn: MlpConfig::default(),
            rnn: RnnOptions::default(),
            svm: SvmConfig::default(),
            pca: PcaConfig::default(),
            gr: GranularConfig::default(),
            dt: DtConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.preprocessors.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config("preprocessors and classifiers must be non-empty".into()));
        }
        for c in Classifier::ALL {
            if self.folds.for_classifier(c) < 2 {
                return Err(Error::Config(format!("folds.{c} must be at least 2")));
            }
        }
        if self.gr.chunk == 0 || self.gr.carry == 0 {
            return Err(Error::Config("gr.chunk and gr.carry must be positive".into()));
        }
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.bpnn.validate().map_err(cfg_err)?;
        if let Some(k) = &self.svm.kernel {
            k.validate().map_err(cfg_err)?;
        }
        if !(self.svm.c > 0.0) {
            return Err(Error::Config("svm.c must be positive".into()));
        }
        Ok(())
    }

    /// Requested cells in canonical order, without duplicates.
    pub fn cells(&self) -> Vec<(Preprocessor, Classifier)> {
        let mut pre = self.preprocessors.clone();
        pre.sort();
        pre.dedup();
        let mut clf = self.classifiers.clone();
        clf.sort();
        clf.dedup();
        pre.iter().flat_map(|&p| clf.iter().map(move |&c| (p, c))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.cells().len(), 15);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parses_sections() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            seed = 9
            preprocessors = ["svm_typo"]
            "#,
        );
        assert!(matches!(cfg, Err(Error::Config(_))));
        let cfg = ExperimentConfig::from_toml(
            r#"
            seed = 9
            strict = true
            preprocessors = ["pca", "none", "pca"]
            classifiers = ["svm"]

            [data]
            rows = 300
            informative = ["ethylene"]

            [folds]
            svm = 4

            [svm]
            c = 2.0
            kernel = { kind = "polynomial", degree = 2, coef = 1.0 }

            [pca]
            policy = { cumulative_threshold = 90.0 }

            [bpnn]
            hidden = [8]
            "#,
        )
        .unwrap();
        assert_eq!(
            cfg.cells(),
            vec![(Preprocessor::None, Classifier::Svm), (Preprocessor::Pca, Classifier::Svm)]
        );
        assert_eq!(cfg.folds.svm, 4);
        assert_eq!(cfg.folds.bpnn, 15);
        assert_eq!(cfg.data.rows, 300);
        assert_eq!(cfg.bpnn.hidden, vec![8]);
        assert_eq!(cfg.pca.policy, ComponentPolicy::CumulativeThreshold(90.0));
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["[folds]\nbpnn = 1", "classifiers = []", "[bpnn]\nlearning_rate = 0.1\nbogus = 1", "[gr]\nchunk = 0"] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }
}
