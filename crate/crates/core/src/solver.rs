//! Objective assembly, projection solve and the pseudo-label refinement loop.

use log::{debug, warn};

use crate::classifier::{ClassifierModel, ClassifierSpec};
use crate::dataset::{HeteroDataset, Label, Preprocessor, Scheme};
use crate::eigen::{solve_generalized, sym_eig, EigenSelection, GenEigOptions, Reduction};
use crate::error::{JipError, Result};
use crate::matrix::{assemble_block_diag, Matrix};
use crate::terms::{correlation_matrix, MmdSet, StructureSet};

/// The regularisation grid searched for α, β and λ.
pub const DEFAULT_GRID: [f64; 6] = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_ITERATIONS: usize = 5;
pub const DEFAULT_DIM: usize = 100;
pub const DEFAULT_NEIGHBORS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct JipHyperParams {
    /// Weight of the Laplacian (local structure) term.
    pub alpha: f64,
    /// Weight of the paired-sample correlation term.
    pub beta: f64,
    /// Weight of the within/between-class scatter terms.
    pub lambda: f64,
    /// Shared subspace dimension `m`.
    pub dim: usize,
    /// Number of refinement iterations `T`.
    pub iterations: usize,
    /// Neighbours per sample in the adjacency graph.
    pub neighbors: usize,
    /// Ridge on the constraint matrix; 0 selects the automatic policy.
    pub ridge: f64,
    pub selection: EigenSelection,
    pub preprocessing: Scheme,
}

impl Default for JipHyperParams {
    fn default() -> Self {
        JipHyperParams {
            alpha: 1.0,
            beta: 1.0,
            lambda: 1.0,
            dim: DEFAULT_DIM,
            iterations: DEFAULT_ITERATIONS,
            neighbors: DEFAULT_NEIGHBORS,
            ridge: 0.0,
            selection: EigenSelection::SmallestPositive,
            preprocessing: Scheme::ZScore,
        }
    }
}

impl JipHyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("lambda", self.lambda), ("ridge", self.ridge)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(JipError::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.dim == 0 {
            return Err(JipError::invalid("subspace dimension must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(JipError::invalid("iteration count must be at least 1"));
        }
        Ok(())
    }
}

/// `W = [A; B]` split by domain, with the eigenvalues of its columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedProjection {
    pub a: Matrix,
    pub b: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl SharedProjection {
    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn stacked(&self) -> Matrix {
        self.a.vstack(&self.b).expect("A and B share a column count")
    }
}

/// `X·(M_0 + Σ M_c + α·L)·Xᵀ + λ·S_w`, symmetrised.
pub fn assemble_lhs(
    x_block: &Matrix,
    mmd: &MmdSet,
    laplacian: &Matrix,
    s_w: &Matrix,
    alpha: f64,
    lambda: f64,
) -> Result<Matrix> {
    let (d, n) = x_block.shape();
    if mmd.m0.shape() != (n, n) || laplacian.shape() != (n, n) {
        return Err(JipError::invalid(format!(
            "sample-space terms must be {n}x{n} to match the data block"
        )));
    }
    if s_w.shape() != (d, d) {
        return Err(JipError::invalid(format!("within-class scatter must be {d}x{d}")));
    }
    let mut inner = mmd.total();
    if alpha != 0.0 {
        inner.add_scaled_in_place(alpha, laplacian);
    }
    let mut lhs = x_block.matmul(&inner)?.matmul_t(x_block)?;
    if lambda != 0.0 {
        lhs.add_scaled_in_place(lambda, s_w);
    }
    lhs.symmetrize();
    Ok(lhs)
}

/// `β·C + λ·S_b`, symmetrised.
pub fn assemble_rhs(c_matrix: &Matrix, s_b: &Matrix, beta: f64, lambda: f64) -> Result<Matrix> {
    if c_matrix.shape() != s_b.shape() || !c_matrix.is_square() {
        return Err(JipError::invalid("correlation and between-class scatter must be the same square shape"));
    }
    let mut rhs = c_matrix.scale(beta);
    rhs.add_scaled_in_place(lambda, s_b);
    rhs.symmetrize();
    Ok(rhs)
}

fn gen_options(params: &JipHyperParams) -> GenEigOptions {
    GenEigOptions {
        ridge: params.ridge,
        selection: params.selection,
    }
}

/// Identity stands in for an all-zero constraint matrix.
fn effective_rhs(rhs: &Matrix) -> Matrix {
    if rhs.is_zero() {
        Matrix::identity(rhs.rows())
    } else {
        rhs.clone()
    }
}

fn split(w: &Matrix, d_s: usize, eigenvalues: Vec<f64>) -> SharedProjection {
    SharedProjection {
        a: w.row_block(0, d_s),
        b: w.row_block(d_s, w.rows()),
        eigenvalues,
    }
}

/// Solves for the `params.dim` smallest generalized eigenpairs and splits the
/// eigenvectors into the source and target maps.
pub fn solve_projection(
    lhs: &Matrix,
    rhs: &Matrix,
    params: &JipHyperParams,
    d_s: usize,
    d_t: usize,
) -> Result<SharedProjection> {
    if lhs.shape() != (d_s + d_t, d_s + d_t) {
        return Err(JipError::invalid("lhs does not match d_s + d_t"));
    }
    let g = solve_generalized(lhs, &effective_rhs(rhs), params.dim, &gen_options(params))?;
    Ok(split(&g.pairs.vectors, d_s, g.pairs.values))
}

/// `(Aᵀ·x_s, Bᵀ·x_t)`.
pub fn project(projection: &SharedProjection, x_s: &Matrix, x_t: &Matrix) -> Result<(Matrix, Matrix)> {
    if x_s.rows() != projection.a.rows() || x_t.rows() != projection.b.rows() {
        return Err(JipError::invalid(format!(
            "projection expects {} source and {} target features, got {} and {}",
            projection.a.rows(),
            projection.b.rows(),
            x_s.rows(),
            x_t.rows()
        )));
    }
    Ok((projection.a.t_matmul(x_s)?, projection.b.t_matmul(x_t)?))
}

/// Orthonormal basis of the column span of `x`, or `None` when it is the
/// whole feature space.
fn data_span(x: &Matrix) -> Result<Option<Matrix>> {
    let mut gram = x.matmul_t(x)?;
    gram.symmetrize();
    let eig = sym_eig(&gram)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > 1e-10 * top)
        .collect();
    if keep.len() == x.rows() {
        return Ok(None);
    }
    Ok(Some(eig.vectors.select_columns(&keep)))
}

/// Basis for the part of feature space the data can see. Directions orthogonal
/// to every sample leave all projections unchanged, so they are removed from
/// the eigenproblem.
struct SpanBasis {
    basis: Option<Matrix>,
    rank: usize,
}

impl SpanBasis {
    fn new(x_s: &Matrix, x_t: &Matrix) -> Result<Self> {
        let (ds, dt) = (x_s.rows(), x_t.rows());
        let qs = data_span(x_s)?;
        let qt = data_span(x_t)?;
        if qs.is_none() && qt.is_none() {
            return Ok(SpanBasis {
                basis: None,
                rank: ds + dt,
            });
        }
        let qs = qs.unwrap_or_else(|| Matrix::identity(ds));
        let qt = qt.unwrap_or_else(|| Matrix::identity(dt));
        let q = assemble_block_diag(&[&qs, &qt])?;
        Ok(SpanBasis {
            rank: q.cols(),
            basis: Some(q),
        })
    }

    fn restrict(&self, m: &Matrix) -> Result<Matrix> {
        match &self.basis {
            None => Ok(m.clone()),
            Some(q) => {
                let mut r = q.t_matmul(m)?.matmul(q)?;
                r.symmetrize();
                Ok(r)
            }
        }
    }

    fn lift(&self, w: Matrix) -> Result<Matrix> {
        match &self.basis {
            None => Ok(w),
            Some(q) => q.matmul(&w),
        }
    }
}

/// Per-iteration diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    /// `Tr(Wᵀ·lhs·W) − Tr(Wᵀ·rhs·W)`, for monitoring only.
    pub objective: f64,
    pub eigenvalues: Vec<f64>,
    /// Target labels after this iteration: true labels where known,
    /// pseudo-labels elsewhere.
    pub target_labels: Vec<u32>,
    /// Pseudo-labels that changed in this iteration.
    pub changed: usize,
    pub reduction: Reduction,
}

#[derive(Clone, Debug)]
pub struct JipModel {
    pub projection: SharedProjection,
    pub source_preprocessor: Preprocessor,
    pub target_preprocessor: Preprocessor,
    /// Target labels used to seed the first iteration.
    pub initial_target_labels: Vec<u32>,
    /// Final target labels (true where labelled, pseudo-labels elsewhere).
    pub target_labels: Vec<u32>,
    pub history: Vec<IterationRecord>,
    /// Classifier trained in the final iteration, in the shared subspace.
    pub classifier: ClassifierModel,
}

impl JipModel {
    pub fn transform_source(&self, x_s: &Matrix) -> Result<Matrix> {
        self.projection.a.t_matmul(&self.source_preprocessor.apply(x_s)?)
    }

    pub fn transform_target(&self, x_t: &Matrix) -> Result<Matrix> {
        self.projection.b.t_matmul(&self.target_preprocessor.apply(x_t)?)
    }

    /// Classifies raw target samples.
    pub fn predict_target(&self, x_t: &Matrix) -> Result<Vec<u32>> {
        self.classifier.predict(&self.transform_target(x_t)?)
    }
}

fn require_full_labels(labels: &[Label], what: &str) -> Result<Vec<u32>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| JipError::invalid(format!("{what} sample {i} is unlabeled"))))
        .collect()
}

fn solve_with_clamp(
    lhs: &Matrix,
    rhs: &Matrix,
    span: &SpanBasis,
    params: &JipHyperParams,
    dim: usize,
) -> Result<(Matrix, Vec<f64>, Reduction)> {
    let lhs_r = span.restrict(lhs)?;
    let rhs_r = span.restrict(rhs)?;
    let opts = gen_options(params);
    let g = match solve_generalized(&lhs_r, &rhs_r, dim, &opts) {
        Err(JipError::ReducedRank { achievable, .. }) if achievable > 0 => {
            warn!("only {achievable} usable eigenpairs, reducing the subspace from {dim}");
            solve_generalized(&lhs_r, &rhs_r, achievable, &opts)?
        }
        other => other?,
    };
    Ok((span.lift(g.pairs.vectors)?, g.pairs.values, g.reduction))
}

/// Runs the full adaptation: initial pseudo-labels from the labelled target
/// samples, then `params.iterations` rounds of term rebuilding, projection
/// solve, and pseudo-label refresh. Deterministic in its inputs.
pub fn fit(dataset: &HeteroDataset, params: &JipHyperParams, classifier: ClassifierSpec) -> Result<JipModel> {
    params.validate()?;
    dataset.validate()?;
    let ys = require_full_labels(&dataset.source.labels, "source")?;
    let class_count = dataset.class_count;

    let source_preprocessor = Preprocessor::fit(&dataset.source.features, params.preprocessing)?;
    let target_preprocessor = Preprocessor::fit(&dataset.target.features, params.preprocessing)?;
    let x_s = source_preprocessor.apply(&dataset.source.features)?;
    let x_t = target_preprocessor.apply(&dataset.target.features)?;
    let (d_s, d_t) = (x_s.rows(), x_t.rows());

    let labeled_t = dataset.target.labeled_indices();
    let unlabeled_t = dataset.target.unlabeled_indices();
    if labeled_t.is_empty() {
        return Err(JipError::invalid("no labelled target samples"));
    }
    let present: std::collections::BTreeSet<u32> =
        labeled_t.iter().filter_map(|&j| dataset.target.labels[j]).collect();
    if present.len() < class_count as usize {
        warn!(
            "labelled target samples cover {} of {class_count} classes",
            present.len()
        );
    }

    let mut dim = params.dim;
    if dim > d_s + d_t {
        warn!("subspace dimension {dim} exceeds d_s + d_t = {}; clamping", d_s + d_t);
        dim = d_s + d_t;
    }
    let span = SpanBasis::new(&x_s, &x_t)?;
    if dim > span.rank {
        warn!("data spans only {} feature directions; clamping subspace dimension {dim}", span.rank);
        dim = span.rank;
    }

    // Step 1: pseudo-labels from the labelled target samples alone.
    let labeled_labels: Vec<Label> = labeled_t.iter().map(|&j| dataset.target.labels[j]).collect();
    let initial = classifier.train(&x_t.select_columns(&labeled_t), &labeled_labels)?;
    let mut yt: Vec<u32> = dataset.target.labels.iter().map(|l| l.unwrap_or(0)).collect();
    if !unlabeled_t.is_empty() {
        let guesses = initial.predict(&x_t.select_columns(&unlabeled_t))?;
        for (&j, g) in unlabeled_t.iter().zip(guesses) {
            yt[j] = g;
        }
    }
    let initial_target_labels = yt.clone();

    let x_block = assemble_block_diag(&[&x_s, &x_t])?;
    let (x_sp, x_tp) = {
        let s: Vec<usize> = dataset.pairs.iter().map(|p| p.0).collect();
        let t: Vec<usize> = dataset.pairs.iter().map(|p| p.1).collect();
        (x_s.select_columns(&s), x_t.select_columns(&t))
    };
    let corr = if dataset.pairs.is_empty() {
        Matrix::zeros(d_s + d_t, d_s + d_t)
    } else {
        correlation_matrix(&x_sp, &x_tp)?
    };

    let mut train_labels: Vec<Label> = ys.iter().map(|&c| Some(c)).collect();
    train_labels.extend(labeled_labels.iter().copied());

    let mut history = Vec::with_capacity(params.iterations);
    let mut last = None;
    for iteration in 1..=params.iterations {
        let mmd = MmdSet::build(&ys, &yt, class_count)?;
        let structure = StructureSet::build(&x_s, &ys, &x_t, &yt, params.neighbors)?;
        let lhs = assemble_lhs(&x_block, &mmd, &structure.laplacian, &structure.sw, params.alpha, params.lambda)?;
        let rhs = effective_rhs(&assemble_rhs(&corr, &structure.sb, params.beta, params.lambda)?);

        let (w, eigenvalues, reduction) = solve_with_clamp(&lhs, &rhs, &span, params, dim)?;
        let objective = lhs.trace_quadratic(&w)? - rhs.trace_quadratic(&w)?;
        let projection = split(&w, d_s, eigenvalues.clone());
        let (z_s, z_t) = project(&projection, &x_s, &x_t)?;

        let train_z = z_s.hstack(&z_t.select_columns(&labeled_t))?;
        let model = classifier.train(&train_z, &train_labels)?;
        let mut changed = 0;
        if !unlabeled_t.is_empty() {
            let guesses = model.predict(&z_t.select_columns(&unlabeled_t))?;
            for (&j, g) in unlabeled_t.iter().zip(guesses) {
                if yt[j] != g {
                    changed += 1;
                    yt[j] = g;
                }
            }
        }
        debug!("iteration {iteration}: objective {objective:.6e}, {changed} pseudo-labels changed");
        history.push(IterationRecord {
            iteration,
            objective,
            eigenvalues,
            target_labels: yt.clone(),
            changed,
            reduction,
        });
        last = Some((projection, model));
    }
    let (projection, classifier) = last.expect("at least one iteration");
    Ok(JipModel {
        projection,
        source_preprocessor,
        target_preprocessor,
        initial_target_labels,
        target_labels: yt,
        history,
        classifier,
    })
}

/// Target-only reference: the classifier trained on labelled target samples
/// in the preprocessed raw target space, predicting the unlabelled ones.
pub fn target_only_predictions(
    dataset: &HeteroDataset,
    scheme: Scheme,
    classifier: ClassifierSpec,
) -> Result<Vec<u32>> {
    let prep = Preprocessor::fit(&dataset.target.features, scheme)?;
    let x_t = prep.apply(&dataset.target.features)?;
    let labeled = dataset.target.labeled_indices();
    let labels: Vec<Label> = labeled.iter().map(|&j| dataset.target.labels[j]).collect();
    let model = classifier.train(&x_t.select_columns(&labeled), &labels)?;
    model.predict(&x_t.select_columns(&dataset.target.unlabeled_indices()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let p = JipHyperParams::default();
        assert_eq!(p.iterations, 5);
        assert_eq!(p.dim, 100);
        assert_eq!(DEFAULT_GRID, [0.0, 0.01, 0.1, 1.0, 10.0, 100.0]);
    }

    #[test]
    fn rhs_weighting() {
        let c = Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap();
        let sb = Matrix::from_diag(&[3.0, 4.0]);
        assert_eq!(assemble_rhs(&c, &sb, 0.0, 2.0).unwrap(), sb.scale(2.0));
        let r = assemble_rhs(&c, &sb, 1.5, 0.0).unwrap();
        assert_eq!(r, c.scale(1.5));
        assert_eq!(r[(0, 0)], 0.0);
        assert!(assemble_rhs(&c, &sb, 0.0, 0.0).unwrap().is_zero());
        assert!(assemble_rhs(&c, &Matrix::identity(3), 1.0, 1.0).is_err());
    }

    #[test]
    fn projection_shapes_and_identity_selection() {
        let lhs = Matrix::from_diag(&[5.0, 1.0, 4.0, 2.0, 3.0]);
        let params = JipHyperParams {
            dim: 2,
            beta: 0.0,
            lambda: 0.0,
            ..JipHyperParams::default()
        };
        let p = solve_projection(&lhs, &Matrix::zeros(5, 5), &params, 2, 3).unwrap();
        assert_eq!(p.a.shape(), (2, 2));
        assert_eq!(p.b.shape(), (3, 2));
        assert_eq!(p.eigenvalues, vec![1.0, 2.0]);

        let xs = Matrix::from_fn(2, 4, |i, j| (i * 4 + j) as f64);
        let xt = Matrix::from_fn(3, 4, |i, j| (i + j) as f64 - 1.0);
        let (zs, zt) = project(&p, &xs, &xt).unwrap();
        // Column 0 of W is e_2, column 1 is e_4: z_s picks row 1, z_t row 1 of x_t.
        assert_eq!(zs.row(0), xs.row(1));
        assert!(zs.row(1).iter().all(|&v| v == 0.0));
        assert_eq!(zt.row(1), xt.row(1));
        assert!(project(&p, &xt, &xs).is_err());
    }

    #[test]
    fn invalid_params() {
        let p = JipHyperParams {
            alpha: -1.0,
            ..JipHyperParams::default()
        };
        assert!(p.validate().is_err());
        let p = JipHyperParams {
            iterations: 0,
            ..JipHyperParams::default()
        };
        assert!(p.validate().is_err());
    }
}
