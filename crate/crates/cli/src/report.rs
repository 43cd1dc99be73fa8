//! Run reports and their JSON-lines / CSV encodings.
//!
//! JSON lines: one `{"type":"record",...}` object per run, then one
//! `{"type":"summary",...}` line carrying the report kind, the exact config,
//! the seeds and the aggregate statistics. CSV: a header plus one row per run;
//! per-iteration accuracies are joined with `;`. CSV has no room for the
//! config, so only JSON lines reproduces a report completely.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ConfigFile, ReportFormat};
use crate::error::{HarnessError, Result};
use crate::harness::Tuple;

/// What the accuracy columns measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Accuracy on the unlabelled target samples against ground truth.
    UnlabeledTarget,
    /// Accuracy on held-out folds of the labelled target samples.
    LabeledTargetCv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Run,
    Grid,
    Ablation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Ablation variant name; absent for plain runs and grid points.
    pub variant: Option<String>,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Requested subspace dimension.
    pub dim: usize,
    pub seed: Option<u64>,
    pub metric: Metric,
    pub baseline_accuracy: f64,
    /// Accuracy after each iteration, first to last.
    pub iteration_accuracy: Vec<f64>,
    pub final_accuracy: Option<f64>,
    /// Subspace dimension actually used after clamping.
    pub subspace_dim: Option<usize>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl RunRecord {
    pub fn tuple(&self) -> Tuple {
        Tuple {
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            dim: self.dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleStats {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub dim: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub runs: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub variant: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// `mean_accuracy` minus the full model's mean accuracy.
    pub delta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub records: usize,
    pub failures: usize,
    /// Mean target-only accuracy over cases.
    pub baseline_mean: Option<f64>,
    /// Tuple with the highest mean accuracy over cases; only tuples without
    /// failures are eligible.
    pub best: Option<TupleStats>,
    /// Mean over cases of each case's best final accuracy.
    pub per_seed_best_mean: Option<f64>,
    pub tuples: Vec<TupleStats>,
    pub ablation: Vec<VariantStats>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups items by key, keeping first-appearance order.
fn group_by<'a, K: PartialEq + Copy>(
    records: impl Iterator<Item = &'a RunRecord>,
    key: impl Fn(&RunRecord) -> K,
) -> Vec<(K, Vec<&'a RunRecord>)> {
    let mut groups: Vec<(K, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let k = key(r);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
}

impl Summary {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let failures = records.iter().filter(|r| r.final_accuracy.is_none()).count();
        let by_seed = group_by(records.iter(), |r| r.seed);
        let baseline_mean =
            (!by_seed.is_empty()).then(|| mean_std(&by_seed.iter().map(|(_, v)| v[0].baseline_accuracy).collect::<Vec<_>>()).0);

        let per_seed_best: Vec<f64> = by_seed
            .iter()
            .filter_map(|(_, v)| v.iter().filter_map(|r| r.final_accuracy).reduce(f64::max))
            .collect();
        let per_seed_best_mean = (!per_seed_best.is_empty()).then(|| mean_std(&per_seed_best).0);

        let plain = records.iter().filter(|r| r.variant.is_none());
        let tuples: Vec<TupleStats> = group_by(plain, |r| r.tuple().key_bits())
            .into_iter()
            .map(|(_, v)| {
                let accs: Vec<f64> = v.iter().filter_map(|r| r.final_accuracy).collect();
                let (mean_accuracy, std_accuracy) = if accs.is_empty() { (0.0, 0.0) } else { mean_std(&accs) };
                let t = v[0].tuple();
                TupleStats {
                    alpha: t.alpha,
                    beta: t.beta,
                    lambda: t.lambda,
                    dim: t.dim,
                    mean_accuracy,
                    std_accuracy,
                    runs: v.len(),
                    failures: v.len() - accs.len(),
                }
            })
            .collect();
        let best = tuples
            .iter()
            .filter(|t| t.failures == 0)
            .fold(None::<&TupleStats>, |b, t| match b {
                Some(b) if b.mean_accuracy >= t.mean_accuracy => Some(b),
                _ => Some(t),
            })
            .cloned();

        let variants = group_by(records.iter().filter(|r| r.variant.is_some()), |r| {
            crate::harness::ABLATION_VARIANTS
                .iter()
                .position(|v| Some(*v) == r.variant.as_deref())
        });
        let mut ablation: Vec<VariantStats> = variants
            .iter()
            .map(|(_, v)| {
                let accs: Vec<f64> = v.iter().filter_map(|r| r.final_accuracy).collect();
                let (mean_accuracy, std_accuracy) = if accs.is_empty() { (0.0, 0.0) } else { mean_std(&accs) };
                VariantStats {
                    variant: v[0].variant.clone().unwrap_or_default(),
                    mean_accuracy,
                    std_accuracy,
                    delta: 0.0,
                }
            })
            .collect();
        if let Some(full) = ablation.iter().find(|a| a.variant == "full").map(|a| a.mean_accuracy) {
            for a in &mut ablation {
                a.delta = a.mean_accuracy - full;
            }
        }

        Summary {
            records: records.len(),
            failures,
            baseline_mean,
            best,
            per_seed_best_mean,
            tuples,
            ablation,
        }
    }
}

impl Tuple {
    fn key_bits(&self) -> (u64, u64, u64, usize) {
        (self.alpha.to_bits(), self.beta.to_bits(), self.lambda.to_bits(), self.dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: ReportKind,
    pub config: ConfigFile,
    pub seeds: Vec<u64>,
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

#[derive(Serialize, Deserialize)]
struct SummaryLine {
    kind: ReportKind,
    config: ConfigFile,
    seeds: Vec<u64>,
    summary: Summary,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Record(RunRecord),
    Summary(Box<SummaryLine>),
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    variant: Option<String>,
    alpha: f64,
    beta: f64,
    lambda: f64,
    dim: usize,
    seed: Option<u64>,
    metric: Metric,
    baseline_accuracy: f64,
    final_accuracy: Option<f64>,
    subspace_dim: Option<usize>,
    iteration_accuracy: String,
    error: Option<String>,
    wall_ms: Option<f64>,
}

impl From<&RunRecord> for CsvRow {
    fn from(r: &RunRecord) -> Self {
        let iters: Vec<String> = r.iteration_accuracy.iter().map(|a| a.to_string()).collect();
        CsvRow {
            variant: r.variant.clone(),
            alpha: r.alpha,
            beta: r.beta,
            lambda: r.lambda,
            dim: r.dim,
            seed: r.seed,
            metric: r.metric,
            baseline_accuracy: r.baseline_accuracy,
            final_accuracy: r.final_accuracy,
            subspace_dim: r.subspace_dim,
            iteration_accuracy: iters.join(";"),
            error: r.error.clone(),
            wall_ms: r.wall_ms,
        }
    }
}

impl CsvRow {
    fn into_record(self) -> std::result::Result<RunRecord, String> {
        let iteration_accuracy = if self.iteration_accuracy.is_empty() {
            Vec::new()
        } else {
            self.iteration_accuracy
                .split(';')
                .map(|s| s.parse::<f64>().map_err(|_| format!("bad iteration accuracy {s:?}")))
                .collect::<std::result::Result<_, _>>()?
        };
        Ok(RunRecord {
            variant: self.variant,
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            dim: self.dim,
            seed: self.seed,
            metric: self.metric,
            baseline_accuracy: self.baseline_accuracy,
            iteration_accuracy,
            final_accuracy: self.final_accuracy,
            subspace_dim: self.subspace_dim,
            error: self.error,
            wall_ms: self.wall_ms,
        })
    }
}

const CSV_HEADER: &str = "variant,alpha,beta,lambda,dim,seed,metric,baseline_accuracy,final_accuracy,\
subspace_dim,iteration_accuracy,error,wall_ms";

impl RunReport {
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&Line::Record(r.clone()))?);
            out.push('\n');
        }
        let summary = Line::Summary(Box::new(SummaryLine {
            kind: self.kind,
            config: self.config.clone(),
            seeds: self.seeds.clone(),
            summary: self.summary.clone(),
        }));
        out.push_str(&serde_json::to_string(&summary)?);
        out.push('\n');
        Ok(out)
    }

    pub fn to_csv(&self) -> Result<String> {
        records_to_csv(&self.records)
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::JsonLines => self.to_json_lines(),
            ReportFormat::Csv => self.to_csv(),
        }
    }

    pub fn from_json_lines(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| HarnessError::Report {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut records = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            if summary.is_some() {
                return Err(err(i + 1, "content after the summary line".into()));
            }
            match serde_json::from_str::<Line>(line).map_err(|e| err(i + 1, e.to_string()))? {
                Line::Record(r) => records.push(r),
                Line::Summary(s) => summary = Some(s),
            }
        }
        let s = summary.ok_or_else(|| err(text.lines().count(), "missing summary line".into()))?;
        Ok(RunReport {
            kind: s.kind,
            config: s.config,
            seeds: s.seeds,
            records,
            summary: s.summary,
        })
    }

    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<()> {
        let text = self.render(format)?;
        let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read_json_lines(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json_lines(&text, path)
    }
}

pub fn records_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    let body = String::from_utf8(bytes).expect("csv output is UTF-8");
    Ok(format!("{CSV_HEADER}\n{body}"))
}

pub fn records_from_csv(text: &str, path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(HarnessError::Report {
            path: path.to_path_buf(),
            line: 1,
            message: "unexpected CSV header".into(),
        });
    }
    r.deserialize::<CsvRow>()
        .enumerate()
        .map(|(i, row)| {
            row?.into_record().map_err(|message| HarnessError::Report {
                path: path.to_path_buf(),
                line: i + 2,
                message,
            })
        })
        .collect()
}
