//! Runs, grid searches and ablations over prepared evaluation cases.
//!
//! A case is one dataset (one synthetic seed, or the loaded files) split into
//! one or more evaluation units. With ground truth there is a single unit that
//! scores the unlabelled target samples. Without it, the labelled target
//! samples are split into folds and each fold is hidden in turn.

use std::time::Instant;

use jip_core::dataset::{load_domain, load_pairing, read_labels};
use jip_core::{
    fit, synth_generate, ClassifierSpec, HeteroDataset, JipHyperParams, Label, Preprocessor, Scheme,
};
use log::info;
use rayon::prelude::*;

use crate::config::{AblationBaseline, DataSource, ExperimentConfig, FileSource};
use crate::error::{HarnessError, Result};
use crate::report::{Metric, ReportKind, RunRecord, RunReport, Summary};

/// A dataset together with the target samples scored against known labels.
#[derive(Clone, Debug)]
pub struct EvalUnit {
    pub dataset: HeteroDataset,
    /// Target indices being scored; all are unlabelled in `dataset`.
    pub held: Vec<usize>,
    pub truth: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Case {
    pub seed: Option<u64>,
    pub metric: Metric,
    pub units: Vec<EvalUnit>,
}

/// The `(α, β, λ, m)` coordinates of one grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tuple {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub dim: usize,
}

impl Tuple {
    pub fn of(params: &JipHyperParams) -> Self {
        Tuple {
            alpha: params.alpha,
            beta: params.beta,
            lambda: params.lambda,
            dim: params.dim,
        }
    }

    fn apply(&self, base: &JipHyperParams) -> JipHyperParams {
        JipHyperParams {
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            dim: self.dim,
            ..base.clone()
        }
    }

    #[cfg(test)]
    fn key(&self) -> (f64, f64, f64, usize) {
        (self.alpha, self.beta, self.lambda, self.dim)
    }
}

/// Every grid tuple, in lexicographic order of `(α, β, λ, m)`.
pub fn grid_tuples(cfg: &ExperimentConfig) -> Vec<Tuple> {
    let g = &cfg.grid;
    let mut out = Vec::with_capacity(g.len());
    for &alpha in &g.alpha {
        for &beta in &g.beta {
            for &lambda in &g.lambda {
                for &dim in &g.dim {
                    out.push(Tuple { alpha, beta, lambda, dim });
                }
            }
        }
    }
    out
}

fn truth_unit(dataset: HeteroDataset, truth_all: &[u32]) -> Result<EvalUnit> {
    if truth_all.len() != dataset.target.len() {
        return Err(HarnessError::config(format!(
            "truth has {} labels for {} target samples",
            truth_all.len(),
            dataset.target.len()
        )));
    }
    let held = dataset.target.unlabeled_indices();
    if held.is_empty() {
        return Err(HarnessError::config("every target sample is labelled; nothing to evaluate"));
    }
    let truth = held.iter().map(|&j| truth_all[j]).collect();
    Ok(EvalUnit { dataset, held, truth })
}

/// Hides each fold of the labelled target samples in turn. Pairs whose target
/// sample is hidden are dropped from that fold's dataset.
pub fn cv_units(dataset: &HeteroDataset, folds: usize) -> Result<Vec<EvalUnit>> {
    let labeled = dataset.target.labeled_indices();
    if labeled.len() < 2 {
        return Err(HarnessError::config(
            "cross-validation needs at least two labelled target samples",
        ));
    }
    let k = folds.min(labeled.len());
    (0..k)
        .map(|f| {
            let held: Vec<usize> = labeled.iter().copied().skip(f).step_by(k).collect();
            let truth: Vec<u32> = held
                .iter()
                .map(|&j| dataset.target.labels[j].expect("labelled index"))
                .collect();
            let mut ds = dataset.clone();
            for &j in &held {
                ds.target.labels[j] = None;
            }
            ds.pairs.retain(|p| !held.contains(&p.1));
            ds.validate()?;
            Ok(EvalUnit {
                dataset: ds,
                held,
                truth,
            })
        })
        .collect()
}

fn file_case(f: &FileSource) -> Result<Case> {
    let source = load_domain(&f.source_features, &f.source_labels, f.class_count)?;
    let target = load_domain(&f.target_features, &f.target_labels, f.class_count)?;
    let pairs = load_pairing(&f.pairs, &source, &target)?;
    let class_count = f
        .class_count
        .unwrap_or_else(|| source.max_class().max(target.max_class()));
    let dataset = HeteroDataset::new(source, target, pairs, class_count)?;
    match &f.target_truth {
        Some(path) => {
            let labels = read_labels(path)?;
            let truth: Vec<u32> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    l.ok_or_else(|| {
                        HarnessError::config(format!("{}: truth label {i} is empty", path.display()))
                    })
                })
                .collect::<Result<_>>()?;
            Ok(Case {
                seed: None,
                metric: Metric::UnlabeledTarget,
                units: vec![truth_unit(dataset, &truth)?],
            })
        }
        None => Ok(Case {
            seed: None,
            metric: Metric::LabeledTargetCv,
            units: cv_units(&dataset, f.cv_folds)?,
        }),
    }
}

/// Loads or generates every case the config describes.
pub fn prepare_cases(cfg: &ExperimentConfig) -> Result<Vec<Case>> {
    match &cfg.data {
        DataSource::Synthetic { spec, seeds } => seeds
            .iter()
            .map(|&seed| {
                let bench = synth_generate(spec, seed)?;
                Ok(Case {
                    seed: Some(seed),
                    metric: Metric::UnlabeledTarget,
                    units: vec![truth_unit(bench.dataset, &bench.target_truth)?],
                })
            })
            .collect(),
        DataSource::Files(f) => Ok(vec![file_case(f)?]),
    }
}

/// Target-only reference accuracy: the classifier trained on labelled target
/// samples in (preprocessed) raw target space.
pub fn baseline_accuracy(case: &Case, scheme: Scheme, classifier: ClassifierSpec) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for unit in &case.units {
        let target = &unit.dataset.target;
        let prep = Preprocessor::fit(&target.features, scheme)?;
        let x = prep.apply(&target.features)?;
        let labeled = target.labeled_indices();
        let labels: Vec<Label> = labeled.iter().map(|&j| target.labels[j]).collect();
        let model = classifier.train(&x.select_columns(&labeled), &labels)?;
        let pred = model.predict(&x.select_columns(&unit.held))?;
        hits += pred.iter().zip(&unit.truth).filter(|(p, t)| p == t).count();
        total += unit.truth.len();
    }
    Ok(hits as f64 / total as f64)
}

struct Evaluation {
    iteration_accuracy: Vec<f64>,
    subspace_dim: usize,
}

fn evaluate(case: &Case, params: &JipHyperParams, classifier: ClassifierSpec) -> Result<Evaluation> {
    let mut hits = vec![0usize; params.iterations];
    let mut total = 0usize;
    let mut subspace_dim = 0;
    for unit in &case.units {
        let model = fit(&unit.dataset, params, classifier)?;
        for (h, rec) in hits.iter_mut().zip(&model.history) {
            *h += unit
                .held
                .iter()
                .zip(&unit.truth)
                .filter(|(&j, &t)| rec.target_labels[j] == t)
                .count();
        }
        total += unit.held.len();
        subspace_dim = model.projection.dim();
    }
    Ok(Evaluation {
        iteration_accuracy: hits.iter().map(|&h| h as f64 / total as f64).collect(),
        subspace_dim,
    })
}

fn run_one(
    cfg: &ExperimentConfig,
    case: &Case,
    baseline: f64,
    tuple: Tuple,
    variant: Option<&str>,
) -> RunRecord {
    let params = tuple.apply(&cfg.params);
    let start = cfg.timing.then(Instant::now);
    let outcome = evaluate(case, &params, cfg.classifier);
    let wall_ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
    let (iteration_accuracy, final_accuracy, subspace_dim, error) = match outcome {
        Ok(e) => {
            let last = e.iteration_accuracy.last().copied();
            (e.iteration_accuracy, last, Some(e.subspace_dim), None)
        }
        Err(err) => (Vec::new(), None, None, Some(err.to_string())),
    };
    RunRecord {
        variant: variant.map(str::to_string),
        alpha: tuple.alpha,
        beta: tuple.beta,
        lambda: tuple.lambda,
        dim: tuple.dim,
        seed: case.seed,
        metric: case.metric,
        baseline_accuracy: baseline,
        iteration_accuracy,
        final_accuracy,
        subspace_dim,
        error,
        wall_ms,
    }
}

fn baselines(cfg: &ExperimentConfig, cases: &[Case]) -> Result<Vec<f64>> {
    cases
        .iter()
        .map(|c| baseline_accuracy(c, cfg.baseline_preprocessing, cfg.classifier))
        .collect()
}

/// Evaluates every `(tuple, case)` combination. Work runs in parallel; the
/// output is ordered tuple-major, then case order.
fn sweep(cfg: &ExperimentConfig, cases: &[Case], base: &[f64], tuples: &[Tuple]) -> Vec<RunRecord> {
    let n = cases.len();
    (0..tuples.len() * n)
        .into_par_iter()
        .map(|k| run_one(cfg, &cases[k % n], base[k % n], tuples[k / n], None))
        .collect()
}

fn report(cfg: &ExperimentConfig, kind: ReportKind, records: Vec<RunRecord>) -> RunReport {
    let summary = Summary::from_records(&records);
    RunReport {
        kind,
        config: cfg.raw.clone(),
        seeds: cfg.seeds(),
        records,
        summary,
    }
}

/// One run per case at the configured `[params]`.
pub fn run_single(cfg: &ExperimentConfig) -> Result<RunReport> {
    let cases = prepare_cases(cfg)?;
    let base = baselines(cfg, &cases)?;
    let records = sweep(cfg, &cases, &base, &[Tuple::of(&cfg.params)]);
    Ok(report(cfg, ReportKind::Run, records))
}

/// Full Cartesian product of the configured grids. A failing tuple is
/// recorded with its error and does not stop the search.
pub fn grid_search(cfg: &ExperimentConfig) -> Result<RunReport> {
    let cases = prepare_cases(cfg)?;
    grid_search_cases(cfg, &cases)
}

pub fn grid_search_cases(cfg: &ExperimentConfig, cases: &[Case]) -> Result<RunReport> {
    let base = baselines(cfg, cases)?;
    let tuples = grid_tuples(cfg);
    info!("grid search: {} tuples x {} cases", tuples.len(), cases.len());
    let records = sweep(cfg, cases, &base, &tuples);
    Ok(report(cfg, ReportKind::Grid, records))
}

pub const ABLATION_VARIANTS: [&str; 5] = ["full", "alpha0", "beta0", "lambda0", "alpha0_lambda0"];

fn ablate_tuple(t: Tuple, variant: &str) -> Tuple {
    match variant {
        "alpha0" => Tuple { alpha: 0.0, ..t },
        "beta0" => Tuple { beta: 0.0, ..t },
        "lambda0" => Tuple { lambda: 0.0, ..t },
        "alpha0_lambda0" => Tuple {
            alpha: 0.0,
            lambda: 0.0,
            ..t
        },
        _ => t,
    }
}

/// Best tuple for one case among grid records (ties go to the earlier tuple).
fn best_tuple_for_case(records: &[RunRecord], seed: Option<u64>) -> Option<Tuple> {
    let mut best: Option<(f64, Tuple)> = None;
    for r in records.iter().filter(|r| r.seed == seed) {
        if let Some(acc) = r.final_accuracy {
            if best.is_none_or(|(b, _)| acc > b) {
                best = Some((acc, r.tuple()));
            }
        }
    }
    best.map(|b| b.1)
}

/// The full model plus the α=0, β=0, λ=0 and α=λ=0 variants, each with the
/// remaining weights held at the baseline tuple.
pub fn ablation(cfg: &ExperimentConfig) -> Result<RunReport> {
    let cases = prepare_cases(cfg)?;
    ablation_cases(cfg, &cases)
}

pub fn ablation_cases(cfg: &ExperimentConfig, cases: &[Case]) -> Result<RunReport> {
    let centres: Vec<Tuple> = match cfg.ablation_baseline {
        AblationBaseline::Fixed => vec![Tuple::of(&cfg.params); cases.len()],
        AblationBaseline::PerSeedGrid => best_tuples(&grid_search_cases(cfg, cases)?, cases)?,
    };
    ablation_at(cfg, cases, &centres)
}

/// Each case's best grid tuple from a grid report over the same cases.
pub fn best_tuples(grid: &RunReport, cases: &[Case]) -> Result<Vec<Tuple>> {
    cases
        .iter()
        .map(|c| {
            best_tuple_for_case(&grid.records, c.seed)
                .ok_or_else(|| HarnessError::config("every grid tuple failed; no ablation baseline"))
        })
        .collect()
}

/// Ablation around an explicit full-model tuple per case.
pub fn ablation_at(cfg: &ExperimentConfig, cases: &[Case], centres: &[Tuple]) -> Result<RunReport> {
    if centres.len() != cases.len() {
        return Err(HarnessError::config("one ablation centre per case is required"));
    }
    let base = baselines(cfg, cases)?;
    let n = cases.len();
    let v = ABLATION_VARIANTS.len();
    let records = (0..n * v)
        .into_par_iter()
        .map(|k| {
            let (ci, vi) = (k / v, k % v);
            let variant = ABLATION_VARIANTS[vi];
            run_one(cfg, &cases[ci], base[ci], ablate_tuple(centres[ci], variant), Some(variant))
        })
        .collect();
    Ok(report(cfg, ReportKind::Ablation, records))
}
