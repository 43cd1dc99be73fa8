//! Experiment configuration.
//!
//! The file format is TOML with one section per concern; every key can also
//! be written flat (`params.alpha = 0.1`) and overridden from the command line
//! with `--set section.key=value`. Unknown keys are rejected.
//!
//! ```toml
//! [data]
//! mode = "synthetic"          # or "files"
//! seeds = [0, 1, 2]
//!
//! [synth]
//! noise_sigma = 0.3
//!
//! [files]
//! source_features = "src_x.csv"
//! source_labels = "src_y.csv"
//! target_features = "tgt_x.csv"
//! target_labels = "tgt_y.csv"
//! pairs = "pairs.csv"
//! target_truth = "tgt_truth.csv"   # optional
//!
//! [params]
//! alpha = 1.0
//! beta = 1.0
//! lambda = 1.0
//! dim = 100
//! iterations = 5
//!
//! [grid]
//! alpha = [0, 0.01, 0.1, 1, 10, 100]
//!
//! [output]
//! format = "json_lines"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use jip_core::solver::{DEFAULT_DIM, DEFAULT_GRID, DEFAULT_ITERATIONS, DEFAULT_NEIGHBORS};
use jip_core::{ClassifierKind, ClassifierSpec, EigenSelection, JipHyperParams, Scheme, SynthSpec};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// `"synthetic"` or `"files"`.
    pub mode: String,
    /// Generator seeds; ignored in file mode.
    pub seeds: Vec<u64>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            mode: "synthetic".into(),
            seeds: vec![0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub class_count: u32,
    pub latent_dim: usize,
    pub samples_per_domain: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    pub noise_sigma: f64,
    pub pair_fraction: f64,
    pub class_separation: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection::from(&SynthSpec::default())
    }
}

impl From<&SynthSpec> for SynthSection {
    fn from(s: &SynthSpec) -> Self {
        SynthSection {
            class_count: s.class_count,
            latent_dim: s.latent_dim,
            samples_per_domain: s.samples_per_domain,
            source_dim: s.source_dim,
            target_dim: s.target_dim,
            noise_sigma: s.noise_sigma,
            pair_fraction: s.pair_fraction,
            class_separation: s.class_separation,
        }
    }
}

impl SynthSection {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            class_count: self.class_count,
            latent_dim: self.latent_dim,
            samples_per_domain: self.samples_per_domain,
            source_dim: self.source_dim,
            target_dim: self.target_dim,
            noise_sigma: self.noise_sigma,
            pair_fraction: self.pair_fraction,
            class_separation: self.class_separation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilesSection {
    pub source_features: Option<PathBuf>,
    pub source_labels: Option<PathBuf>,
    pub target_features: Option<PathBuf>,
    pub target_labels: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    /// Labels for every target sample; enables direct evaluation.
    pub target_truth: Option<PathBuf>,
    pub class_count: Option<u32>,
    /// Folds for labelled-target cross-validation when no truth file is given.
    pub cv_folds: usize,
}

impl Default for FilesSection {
    fn default() -> Self {
        FilesSection {
            source_features: None,
            source_labels: None,
            target_features: None,
            target_labels: None,
            pairs: None,
            target_truth: None,
            class_count: None,
            cv_folds: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub dim: usize,
    pub iterations: usize,
    pub neighbors: usize,
    pub ridge: f64,
    pub selection: String,
    pub preprocessing: String,
    /// Preprocessing for the target-only reference classifier; defaults to
    /// `preprocessing`.
    pub baseline_preprocessing: Option<String>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = JipHyperParams::default();
        ParamsSection {
            alpha: p.alpha,
            beta: p.beta,
            lambda: p.lambda,
            dim: DEFAULT_DIM,
            iterations: DEFAULT_ITERATIONS,
            neighbors: DEFAULT_NEIGHBORS,
            ridge: p.ridge,
            selection: p.selection.to_string(),
            preprocessing: p.preprocessing.to_string(),
            baseline_preprocessing: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Subspace dimensions to sweep; empty means `[params.dim]`.
    pub dim: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            alpha: DEFAULT_GRID.to_vec(),
            beta: DEFAULT_GRID.to_vec(),
            lambda: DEFAULT_GRID.to_vec(),
            dim: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub kind: String,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            kind: ClassifierKind::default().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    /// `"fixed"` ablates around `[params]`; `"grid"` first picks the best
    /// grid tuple for each seed.
    pub baseline: String,
}

impl Default for AblationSection {
    fn default() -> Self {
        AblationSection {
            baseline: "fixed".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: String,
    /// Record wall time per run. Off by default so reports are reproducible
    /// byte for byte.
    pub timing: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: None,
            format: ReportFormat::JsonLines.to_string(),
            timing: false,
        }
    }
}

/// The configuration exactly as written (after overrides). Reports embed it
/// verbatim so a run can be reproduced from its report alone.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub data: DataSection,
    pub synth: SynthSection,
    pub files: FilesSection,
    pub params: ParamsSection,
    pub grid: GridSection,
    pub classifier: ClassifierSection,
    pub ablation: AblationSection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    JsonLines,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json_lines" | "jsonl" => Ok(ReportFormat::JsonLines),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(HarnessError::config(format!("unknown report format {other:?}"))),
        }
    }
}

impl std::fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportFormat::JsonLines => "json_lines",
            ReportFormat::Csv => "csv",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FileSource {
    pub source_features: PathBuf,
    pub source_labels: PathBuf,
    pub target_features: PathBuf,
    pub target_labels: PathBuf,
    pub pairs: PathBuf,
    pub target_truth: Option<PathBuf>,
    pub class_count: Option<u32>,
    pub cv_folds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic { spec: SynthSpec, seeds: Vec<u64> },
    Files(FileSource),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationBaseline {
    Fixed,
    PerSeedGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub dim: Vec<usize>,
}

impl ParamGrid {
    pub fn len(&self) -> usize {
        self.alpha.len() * self.beta.len() * self.lambda.len() * self.dim.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub raw: ConfigFile,
    pub data: DataSource,
    pub params: JipHyperParams,
    pub baseline_preprocessing: Scheme,
    pub grid: ParamGrid,
    pub classifier: ClassifierSpec,
    pub ablation_baseline: AblationBaseline,
    pub output_path: Option<PathBuf>,
    pub format: ReportFormat,
    pub timing: bool,
}

fn check_grid(name: &str, values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(HarnessError::config(format!("grid.{name} is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(HarnessError::config(format!("grid.{name} contains {v}; weights must be finite and >= 0")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn required(value: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    value
        .clone()
        .ok_or_else(|| HarnessError::config(format!("file mode requires files.{key}")))
}

impl ExperimentConfig {
    pub fn from_file_struct(raw: ConfigFile) -> Result<Self> {
        let data = match raw.data.mode.as_str() {
            "synthetic" => {
                if raw.data.seeds.is_empty() {
                    return Err(HarnessError::config("data.seeds is empty"));
                }
                let spec = raw.synth.spec();
                spec.validate()?;
                DataSource::Synthetic {
                    spec,
                    seeds: raw.data.seeds.clone(),
                }
            }
            "files" => {
                let f = &raw.files;
                if f.cv_folds < 2 {
                    return Err(HarnessError::config("files.cv_folds must be at least 2"));
                }
                DataSource::Files(FileSource {
                    source_features: required(&f.source_features, "source_features")?,
                    source_labels: required(&f.source_labels, "source_labels")?,
                    target_features: required(&f.target_features, "target_features")?,
                    target_labels: required(&f.target_labels, "target_labels")?,
                    pairs: required(&f.pairs, "pairs")?,
                    target_truth: f.target_truth.clone(),
                    class_count: f.class_count,
                    cv_folds: f.cv_folds,
                })
            }
            other => {
                return Err(HarnessError::config(format!(
                    "data.mode must be \"synthetic\" or \"files\", got {other:?}"
                )))
            }
        };

        let p = &raw.params;
        let params = JipHyperParams {
            alpha: p.alpha,
            beta: p.beta,
            lambda: p.lambda,
            dim: p.dim,
            iterations: p.iterations,
            neighbors: p.neighbors,
            ridge: p.ridge,
            selection: EigenSelection::from_str(&p.selection)?,
            preprocessing: Scheme::from_str(&p.preprocessing)?,
        };
        params.validate()?;
        let baseline_preprocessing = match &p.baseline_preprocessing {
            Some(s) => Scheme::from_str(s)?,
            None => params.preprocessing,
        };

        let mut dims = if raw.grid.dim.is_empty() {
            vec![params.dim]
        } else {
            raw.grid.dim.clone()
        };
        if dims.contains(&0) {
            return Err(HarnessError::config("grid.dim entries must be at least 1"));
        }
        dims.sort_unstable();
        dims.dedup();
        let grid = ParamGrid {
            alpha: check_grid("alpha", &raw.grid.alpha)?,
            beta: check_grid("beta", &raw.grid.beta)?,
            lambda: check_grid("lambda", &raw.grid.lambda)?,
            dim: dims,
        };

        let ablation_baseline = match raw.ablation.baseline.as_str() {
            "fixed" => AblationBaseline::Fixed,
            "grid" => AblationBaseline::PerSeedGrid,
            other => {
                return Err(HarnessError::config(format!(
                    "ablation.baseline must be \"fixed\" or \"grid\", got {other:?}"
                )))
            }
        };

        Ok(ExperimentConfig {
            data,
            params,
            baseline_preprocessing,
            grid,
            classifier: ClassifierSpec::new(ClassifierKind::from_str(&raw.classifier.kind)?),
            ablation_baseline,
            output_path: raw.output.path.clone(),
            format: ReportFormat::from_str(&raw.output.format)?,
            timing: raw.output.timing,
            raw,
        })
    }

    /// Parses TOML text and applies `key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| HarnessError::config(format!("invalid TOML: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let raw = ConfigFile::deserialize(toml::Value::Table(table))
            .map_err(|e| HarnessError::config(e.to_string()))?;
        Self::from_file_struct(raw)
    }

    /// Loads a config file (or the defaults when `path` is `None`) and
    /// applies overrides. Relative data paths are resolved against the
    /// config file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?,
            None => String::new(),
        };
        let mut cfg = Self::from_toml_str(&text, overrides)?;
        if let (Some(base), DataSource::Files(f)) = (path.and_then(Path::parent), &mut cfg.data) {
            for p in [
                &mut f.source_features,
                &mut f.source_labels,
                &mut f.target_features,
                &mut f.target_labels,
                &mut f.pairs,
            ] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            if let Some(t) = f.target_truth.as_mut().filter(|t| t.is_relative()) {
                *t = base.join(&*t);
            }
        }
        Ok(cfg)
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.data {
            DataSource::Synthetic { seeds, .. } => seeds.clone(),
            DataSource::Files(_) => Vec::new(),
        }
    }
}

/// Applies one `dotted.key=value` override. The value is read as a TOML
/// value when it parses as one and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::config(format!("malformed override key {key:?}")));
    }
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for s in sections {
        let entry = cur
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::config(format!("override {key:?}: {s} is not a section")))?;
    }
    cur.insert(last.to_string(), parsed);
    Ok(())
}
