//! Two-domain datasets, CSV ingestion and feature preprocessing.
//!
//! File formats (all comma-separated, no header):
//!
//! * features: one line per feature, one column per sample;
//! * labels: a single line with one cell per sample, empty cell = unlabeled;
//! * pairing: one `source_index,target_index` line per pair, 0-based.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{JipError, Result};
use crate::matrix::Matrix;

/// A class id in `1..=C`, or [`UNLABELED`].
pub type Label = Option<u32>;

pub const UNLABELED: Label = None;

/// One domain: a `d × n` feature matrix (one column per sample) and its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainData {
    pub features: Matrix,
    pub labels: Vec<Label>,
}

impl DomainData {
    pub fn new(features: Matrix, labels: Vec<Label>) -> Result<Self> {
        if features.cols() != labels.len() {
            return Err(JipError::invalid(format!(
                "{} samples in the feature matrix but {} labels",
                features.cols(),
                labels.len()
            )));
        }
        if labels.contains(&Some(0)) {
            return Err(JipError::Validation("class ids start at 1".into()));
        }
        Ok(DomainData { features, labels })
    }

    pub fn dim(&self) -> usize {
        self.features.rows()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].is_some()).collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].is_none()).collect()
    }

    /// Largest class id present, 0 when nothing is labeled.
    pub fn max_class(&self) -> u32 {
        self.labels.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Source and target domains plus the one-to-one pairing between them.
#[derive(Clone, Debug, PartialEq)]
pub struct HeteroDataset {
    pub source: DomainData,
    pub target: DomainData,
    pub pairs: Vec<(usize, usize)>,
    pub class_count: u32,
}

impl HeteroDataset {
    pub fn new(
        source: DomainData,
        target: DomainData,
        pairs: Vec<(usize, usize)>,
        class_count: u32,
    ) -> Result<Self> {
        let ds = HeteroDataset {
            source,
            target,
            pairs,
            class_count,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks every dataset invariant: labels within `1..=C`, a one-to-one
    /// pairing over in-range indices, and shared labels on every pair.
    pub fn validate(&self) -> Result<()> {
        if self.class_count == 0 {
            return Err(JipError::Validation("class count must be at least 1".into()));
        }
        for (name, dom) in [("source", &self.source), ("target", &self.target)] {
            if dom.features.cols() != dom.labels.len() {
                return Err(JipError::Validation(format!(
                    "{name}: {} samples but {} labels",
                    dom.features.cols(),
                    dom.labels.len()
                )));
            }
            if let Some((i, c)) = dom
                .labels
                .iter()
                .enumerate()
                .find_map(|(i, l)| l.filter(|&c| c == 0 || c > self.class_count).map(|c| (i, c)))
            {
                return Err(JipError::Validation(format!(
                    "{name} sample {i} has label {c} outside 1..={}",
                    self.class_count
                )));
            }
        }
        check_pairing(&self.pairs, &self.source, &self.target)?;
        if self.pairs.len() > self.source.len().min(self.target.len()) {
            return Err(JipError::Validation("more pairs than samples".into()));
        }
        Ok(())
    }

    /// Paired source columns and paired target columns, aligned by pair.
    pub fn paired_features(&self) -> (Matrix, Matrix) {
        let s: Vec<usize> = self.pairs.iter().map(|p| p.0).collect();
        let t: Vec<usize> = self.pairs.iter().map(|p| p.1).collect();
        (
            self.source.features.select_columns(&s),
            self.target.features.select_columns(&t),
        )
    }
}

fn check_pairing(pairs: &[(usize, usize)], source: &DomainData, target: &DomainData) -> Result<()> {
    let mut seen_s = HashSet::new();
    let mut seen_t = HashSet::new();
    for (k, &(s, t)) in pairs.iter().enumerate() {
        if s >= source.len() || t >= target.len() {
            return Err(JipError::Validation(format!(
                "pair {k} ({s},{t}) is out of range ({} source, {} target samples)",
                source.len(),
                target.len()
            )));
        }
        if !seen_s.insert(s) {
            return Err(JipError::Validation(format!(
                "pair {k} ({s},{t}): duplicate source index {s}"
            )));
        }
        if !seen_t.insert(t) {
            return Err(JipError::Validation(format!(
                "pair {k} ({s},{t}): duplicate target index {t}"
            )));
        }
        match (source.labels[s], target.labels[t]) {
            (Some(a), Some(b)) if a == b => {}
            (a, b) => {
                return Err(JipError::Validation(format!(
                    "pair {k} ({s},{t}): label mismatch (source {}, target {})",
                    fmt_label(a),
                    fmt_label(b)
                )))
            }
        }
    }
    Ok(())
}

fn fmt_label(l: Label) -> String {
    l.map_or_else(|| "unlabeled".to_string(), |c| c.to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| JipError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> JipError {
    JipError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn read_features(path: &Path) -> Result<Matrix> {
    let text = read(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let row = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line_no, format!("not a finite number: {cell:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("row has {} cells, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no feature rows"));
    }
    Matrix::from_rows(&rows)
}

pub fn read_labels(path: &Path) -> Result<Vec<Label>> {
    let text = read(path)?;
    if text.is_empty() {
        return Ok(Vec::new());
    }
    // The first line is the label row even when blank: a single unlabelled
    // sample is written as an empty line.
    let mut lines = text.lines().enumerate();
    let (_, line) = lines.next().unwrap_or((0, ""));
    let line_no = 1;
    if let Some((extra, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(path, extra + 1, "label file must be a single line"));
    }
    line.trim().split(',')
        .map(|cell| {
            let cell = cell.trim();
            if cell.is_empty() {
                return Ok(UNLABELED);
            }
            cell.parse::<u32>()
                .map(Some)
                .map_err(|_| parse_err(path, line_no, format!("not a class id: {cell:?}")))
        })
        .collect()
}

/// Loads one domain. Labels outside `1..=class_count` are rejected when a
/// class count is given (and 0 is always rejected).
pub fn load_domain(features_path: &Path, labels_path: &Path, class_count: Option<u32>) -> Result<DomainData> {
    let features = read_features(features_path)?;
    let labels = read_labels(labels_path)?;
    if labels.len() != features.cols() {
        return Err(JipError::Validation(format!(
            "{} has {} samples but {} has {} labels",
            features_path.display(),
            features.cols(),
            labels_path.display(),
            labels.len()
        )));
    }
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = *l {
            if c == 0 || class_count.is_some_and(|cc| c > cc) {
                return Err(JipError::Validation(format!(
                    "{}: sample {i} has label {c} outside 1..={}",
                    labels_path.display(),
                    class_count.map_or_else(|| "C".to_string(), |c| c.to_string())
                )));
            }
        }
    }
    DomainData::new(features, labels)
}

/// Reads and validates a pairing file against both domains.
pub fn load_pairing(path: &Path, source: &DomainData, target: &DomainData) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    let mut pairs = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cells.as_slice() {
            [s, t] => s.parse::<usize>().ok().zip(t.parse::<usize>().ok()),
            _ => None,
        };
        let Some(pair) = parsed else {
            return Err(parse_err(path, line_no, format!("expected \"s,t\", got {line:?}")));
        };
        pairs.push(pair);
    }
    check_pairing(&pairs, source, target)?;
    Ok(pairs)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| JipError::io(path, e))
}

pub fn save_features(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // `{}` prints the shortest representation that parses back exactly.
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    write(path, &out)
}

pub fn save_labels(path: &Path, labels: &[Label]) -> Result<()> {
    let cells: Vec<String> = labels
        .iter()
        .map(|l| l.map_or_else(String::new, |c| c.to_string()))
        .collect();
    write(path, &(cells.join(",") + "\n"))
}

pub fn save_pairing(path: &Path, pairs: &[(usize, usize)]) -> Result<()> {
    let mut out = String::new();
    for (s, t) in pairs {
        writeln!(out, "{s},{t}").unwrap();
    }
    write(path, &out)
}

/// Feature preprocessing applied per domain before adaptation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Scheme {
    None,
    /// Each feature row shifted to mean 0 and scaled to unit (population) std.
    #[default]
    ZScore,
    /// `ZScore`, then each sample column scaled to unit Euclidean norm.
    ZScoreUnitNorm,
}

impl std::str::FromStr for Scheme {
    type Err = JipError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Scheme::None),
            "zscore" => Ok(Scheme::ZScore),
            "zscore_unitnorm" => Ok(Scheme::ZScoreUnitNorm),
            other => Err(JipError::invalid(format!("unknown preprocessing scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::None => "none",
            Scheme::ZScore => "zscore",
            Scheme::ZScoreUnitNorm => "zscore_unitnorm",
        })
    }
}

/// Standard deviations below this are treated as constant features.
const MIN_STD: f64 = 1e-12;

/// Per-feature statistics captured from training data.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessor {
    pub scheme: Scheme,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Preprocessor {
    pub fn fit(features: &Matrix, scheme: Scheme) -> Result<Self> {
        let (d, n) = features.shape();
        if scheme == Scheme::None {
            return Ok(Preprocessor {
                scheme,
                means: vec![0.0; d],
                scales: vec![1.0; d],
            });
        }
        if n < 2 {
            return Err(JipError::invalid(format!("{scheme} needs at least 2 samples, got {n}")));
        }
        let mut means = Vec::with_capacity(d);
        let mut scales = Vec::with_capacity(d);
        for i in 0..d {
            let row = features.row(i);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            means.push(mean);
            scales.push(if std < MIN_STD { 1.0 } else { std });
        }
        Ok(Preprocessor { scheme, means, scales })
    }

    pub fn apply(&self, features: &Matrix) -> Result<Matrix> {
        if features.rows() != self.means.len() {
            return Err(JipError::invalid(format!(
                "preprocessor fitted on {} features, got {}",
                self.means.len(),
                features.rows()
            )));
        }
        if self.scheme == Scheme::None {
            return Ok(features.clone());
        }
        let mut out = Matrix::from_fn(features.rows(), features.cols(), |i, j| {
            (features[(i, j)] - self.means[i]) / self.scales[i]
        });
        if self.scheme == Scheme::ZScoreUnitNorm {
            let norms = out.column_norms();
            for i in 0..out.rows() {
                for (v, &nrm) in out.row_mut(i).iter_mut().zip(&norms) {
                    if nrm > 0.0 {
                        *v /= nrm;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Fits and applies `scheme` to one domain.
pub fn preprocess(data: &DomainData, scheme: Scheme) -> Result<DomainData> {
    let p = Preprocessor::fit(&data.features, scheme)?;
    Ok(DomainData {
        features: p.apply(&data.features)?,
        labels: data.labels.clone(),
    })
}
