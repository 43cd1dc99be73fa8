//! Deterministic classifiers used for pseudo-labelling and evaluation.
//!
//! Exact distance ties go to the lowest class id, then to the lowest training
//! index, so predictions never depend on the order training samples arrive in.

use std::str::FromStr;

use crate::dataset::Label;
use crate::error::{JipError, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    #[default]
    OneNn,
    NearestCentroid,
}

impl FromStr for ClassifierKind {
    type Err = JipError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_nn" | "1nn" => Ok(ClassifierKind::OneNn),
            "nearest_centroid" => Ok(ClassifierKind::NearestCentroid),
            other => Err(JipError::invalid(format!("unknown classifier {other:?}"))),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassifierKind::OneNn => "one_nn",
            ClassifierKind::NearestCentroid => "nearest_centroid",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierSpec { kind }
    }

    /// Trains on the columns of `z` (one sample per column).
    pub fn train(&self, z: &Matrix, labels: &[Label]) -> Result<ClassifierModel> {
        if z.cols() == 0 {
            return Err(JipError::invalid("cannot train on an empty training set"));
        }
        if labels.len() != z.cols() {
            return Err(JipError::invalid(format!(
                "{} training samples but {} labels",
                z.cols(),
                labels.len()
            )));
        }
        let labels: Vec<u32> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| JipError::invalid(format!("training sample {i} is unlabeled")))
            })
            .collect::<Result<_>>()?;
        let samples: Vec<Vec<f64>> = (0..z.cols()).map(|j| z.column(j)).collect();
        let (points, classes) = match self.kind {
            ClassifierKind::OneNn => (samples, labels),
            ClassifierKind::NearestCentroid => centroids(&samples, &labels),
        };
        Ok(ClassifierModel {
            dim: z.rows(),
            points,
            classes,
        })
    }
}

fn centroids(samples: &[Vec<f64>], labels: &[u32]) -> (Vec<Vec<f64>>, Vec<u32>) {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let dim = samples[0].len();
    let points = classes
        .iter()
        .map(|&c| {
            let mut acc = vec![0.0; dim];
            let mut count = 0usize;
            for (s, _) in samples.iter().zip(labels).filter(|(_, &l)| l == c) {
                acc.iter_mut().zip(s).for_each(|(a, v)| *a += v);
                count += 1;
            }
            acc.iter_mut().for_each(|a| *a /= count as f64);
            acc
        })
        .collect();
    (points, classes)
}

/// Stored reference points (training samples or class centroids) with their classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel {
    dim: usize,
    points: Vec<Vec<f64>>,
    classes: Vec<u32>,
}

impl ClassifierModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predict_one(&self, q: &[f64]) -> u32 {
        let mut best: Option<(f64, u32, usize)> = None;
        for (idx, (p, &c)) in self.points.iter().zip(&self.classes).enumerate() {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            let cand = (d2, c, idx);
            let better = match best {
                None => true,
                Some(b) => {
                    cand.0 < b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2))
                }
            };
            if better {
                best = Some(cand);
            }
        }
        best.map(|b| b.1).expect("trained model has at least one point")
    }

    /// Predicts a class for every column of `queries`.
    pub fn predict(&self, queries: &Matrix) -> Result<Vec<u32>> {
        if queries.rows() != self.dim {
            return Err(JipError::invalid(format!(
                "query dimension {} does not match training dimension {}",
                queries.rows(),
                self.dim
            )));
        }
        Ok((0..queries.cols())
            .map(|j| self.predict_one(&queries.column(j)))
            .collect())
    }
}

/// Fraction of exact matches.
pub fn accuracy(predicted: &[u32], truth: &[u32]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(JipError::invalid(format!(
            "{} predictions for {} truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(JipError::invalid("accuracy over zero samples"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(points: &[[f64; 2]]) -> Matrix {
        Matrix::from_fn(2, points.len(), |i, j| points[j][i])
    }

    #[test]
    fn centroid_is_class_mean() {
        let spec = ClassifierSpec::new(ClassifierKind::NearestCentroid);
        let model = spec.train(&cols(&[[0.0, 0.0], [2.0, 0.0]]), &[Some(1), Some(1)]).unwrap();
        assert_eq!(model.points, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn single_point_predicts_everything() {
        let model = ClassifierSpec::default().train(&cols(&[[3.0, 4.0]]), &[Some(7)]).unwrap();
        let q = cols(&[[0.0, 0.0], [100.0, -5.0], [3.0, 4.0]]);
        assert_eq!(model.predict(&q).unwrap(), vec![7, 7, 7]);
    }

    #[test]
    fn unlabeled_or_empty_training_rejected() {
        let spec = ClassifierSpec::default();
        assert!(spec.train(&cols(&[[0.0, 0.0]]), &[None]).is_err());
        assert!(spec.train(&Matrix::zeros(2, 0), &[]).is_err());
    }

    #[test]
    fn ties_go_to_lowest_class() {
        for kind in [ClassifierKind::OneNn, ClassifierKind::NearestCentroid] {
            let spec = ClassifierSpec::new(kind);
            let model = spec
                .train(&cols(&[[1.0, 0.0], [-1.0, 0.0]]), &[Some(2), Some(1)])
                .unwrap();
            assert_eq!(model.predict(&cols(&[[0.0, 0.0]])).unwrap(), vec![1]);
            assert_eq!(model.predict(&cols(&[[1.0, 0.0]])).unwrap(), vec![2]);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let model = ClassifierSpec::default().train(&cols(&[[1.0, 0.0]]), &[Some(1)]).unwrap();
        assert!(model.predict(&Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn accuracy_counts() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[2, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 1]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }
}
