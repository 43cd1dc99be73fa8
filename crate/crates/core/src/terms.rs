//! Matrix terms of the adaptation objective.
//!
//! Sample-space matrices (MMD, adjacency, Laplacian) are `n × n` with
//! `n = n_s + n_t`, source samples first. Feature-space matrices (correlation,
//! scatter) are `(d_s + d_t) × (d_s + d_t)`, source features first.

use crate::dataset::Label;
use crate::error::{JipError, Result};
use crate::matrix::{assemble_block_diag, dot, norm, Matrix};

/// Marginal and class-conditional MMD matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MmdSet {
    pub m0: Matrix,
    /// `per_class[c - 1]` is `M_c`.
    pub per_class: Vec<Matrix>,
    /// `(n_s^c, n_t^c)` for each class.
    pub class_counts: Vec<(usize, usize)>,
}

impl MmdSet {
    pub fn build(source_labels: &[u32], target_labels: &[u32], class_count: u32) -> Result<Self> {
        let m0 = mmd_marginal(source_labels.len(), target_labels.len())?;
        let mut per_class = Vec::with_capacity(class_count as usize);
        let mut class_counts = Vec::with_capacity(class_count as usize);
        for c in 1..=class_count {
            per_class.push(mmd_conditional(source_labels, target_labels, c));
            class_counts.push((
                source_labels.iter().filter(|&&y| y == c).count(),
                target_labels.iter().filter(|&&y| y == c).count(),
            ));
        }
        Ok(MmdSet {
            m0,
            per_class,
            class_counts,
        })
    }

    /// `M_0 + Σ_c M_c`.
    pub fn total(&self) -> Matrix {
        let mut acc = self.m0.clone();
        for mc in &self.per_class {
            acc.add_scaled_in_place(1.0, mc);
        }
        acc
    }
}

/// Fills `e·eᵀ` into an `n × n` matrix, where `e` holds `1/n_s` on the chosen
/// source positions and `-1/n_t` on the chosen target positions.
fn mean_difference_outer(n_s: usize, n_t: usize, src: &[usize], tgt: &[usize]) -> Matrix {
    let n = n_s + n_t;
    let mut e = vec![0.0; n];
    let ws = 1.0 / src.len() as f64;
    let wt = -1.0 / tgt.len() as f64;
    for &i in src {
        e[i] = ws;
    }
    for &j in tgt {
        e[n_s + j] = wt;
    }
    let idx: Vec<usize> = src.iter().copied().chain(tgt.iter().map(|j| n_s + j)).collect();
    let mut m = Matrix::zeros(n, n);
    for &i in &idx {
        for &j in &idx {
            m[(i, j)] = e[i] * e[j];
        }
    }
    m
}

/// Marginal MMD matrix: `1/n_s²` on the source block, `1/n_t²` on the target
/// block and `-1/(n_s·n_t)` across.
pub fn mmd_marginal(n_s: usize, n_t: usize) -> Result<Matrix> {
    if n_s == 0 || n_t == 0 {
        return Err(JipError::invalid("marginal MMD needs samples in both domains"));
    }
    let src: Vec<usize> = (0..n_s).collect();
    let tgt: Vec<usize> = (0..n_t).collect();
    Ok(mean_difference_outer(n_s, n_t, &src, &tgt))
}

/// Conditional MMD matrix for class `class`, zero if the class is missing
/// from either domain.
pub fn mmd_conditional(source_labels: &[u32], target_labels: &[u32], class: u32) -> Matrix {
    let (n_s, n_t) = (source_labels.len(), target_labels.len());
    let src: Vec<usize> = (0..n_s).filter(|&i| source_labels[i] == class).collect();
    let tgt: Vec<usize> = (0..n_t).filter(|&j| target_labels[j] == class).collect();
    if src.is_empty() || tgt.is_empty() {
        return Matrix::zeros(n_s + n_t, n_s + n_t);
    }
    mean_difference_outer(n_s, n_t, &src, &tgt)
}

/// Subtracts each row's mean from that row.
fn center_rows(x: &Matrix) -> Matrix {
    let n = x.cols() as f64;
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let mean = row.iter().sum::<f64>() / n;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    out
}

/// Correlation matrix `[0, X_SP·H·X_TPᵀ; X_TP·H·X_SPᵀ, 0]`.
pub fn correlation_matrix(x_sp: &Matrix, x_tp: &Matrix) -> Result<Matrix> {
    if x_sp.cols() != x_tp.cols() || x_sp.cols() == 0 {
        return Err(JipError::invalid(format!(
            "paired matrices need equal, non-zero sample counts ({} vs {})",
            x_sp.cols(),
            x_tp.cols()
        )));
    }
    let (ds, dt) = (x_sp.rows(), x_tp.rows());
    // H is idempotent, so X_SP·H·X_TPᵀ = (X_SP·H)·X_TPᵀ with only one side centred.
    let cross = center_rows(x_sp).matmul_t(x_tp)?;
    let mut c = Matrix::zeros(ds + dt, ds + dt);
    for i in 0..ds {
        for j in 0..dt {
            c[(i, ds + j)] = cross[(i, j)];
            c[(ds + j, i)] = cross[(i, j)];
        }
    }
    Ok(c)
}

fn cosine_block(x: &Matrix, labels: &[u32], k: usize) -> Matrix {
    let n = x.cols();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        if norms[i] == 0.0 {
            continue;
        }
        let mut cands: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i && labels[j] == labels[i] && norms[j] > 0.0)
            .map(|j| (dot(&cols[i], &cols[j]) / (norms[i] * norms[j]), j))
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(sim, j) in cands.iter().take(k) {
            let sim = sim.clamp(0.0, 1.0);
            if sim > w[(i, j)] {
                w[(i, j)] = sim;
                w[(j, i)] = sim;
            }
        }
    }
    w
}

/// Discriminative cosine adjacency: within each domain, `i` links to its `k`
/// most cosine-similar samples of the same label with weight
/// `max(0, cos)`; symmetrised by elementwise max. Cross-domain entries are zero.
pub fn build_adjacency(
    x_s: &Matrix,
    y_s: &[u32],
    x_t: &Matrix,
    y_t: &[u32],
    k: usize,
) -> Result<Matrix> {
    if x_s.cols() != y_s.len() || x_t.cols() != y_t.len() {
        return Err(JipError::invalid("adjacency: labels do not match sample counts"));
    }
    let ws = cosine_block(x_s, y_s, k);
    let wt = cosine_block(x_t, y_t, k);
    assemble_block_diag(&[&ws, &wt])
}

/// Graph Laplacian `D − W`.
pub fn laplacian(adjacency: &Matrix) -> Result<Matrix> {
    if !adjacency.is_square() {
        return Err(JipError::invalid("adjacency must be square"));
    }
    if adjacency.asymmetry() > 1e-12 * adjacency.max_abs() {
        return Err(JipError::invalid("adjacency must be symmetric"));
    }
    let n = adjacency.rows();
    if (0..n).any(|i| adjacency[(i, i)] != 0.0) || adjacency.as_slice().iter().any(|&v| v < 0.0) {
        return Err(JipError::invalid(
            "adjacency must be non-negative with a zero diagonal",
        ));
    }
    let degrees = adjacency.row_sums();
    let mut l = adjacency.scale(-1.0);
    for (i, d) in degrees.into_iter().enumerate() {
        l[(i, i)] = d;
    }
    Ok(l)
}

fn outer_accumulate(acc: &mut Matrix, v: &[f64], weight: f64) {
    for i in 0..v.len() {
        if v[i] == 0.0 {
            continue;
        }
        let wi = weight * v[i];
        for (a, &vj) in acc.row_mut(i).iter_mut().zip(v) {
            *a += wi * vj;
        }
    }
}

/// Within-class and between-class scatter of one fully labelled domain.
pub fn scatter_matrices(features: &Matrix, labels: &[Label]) -> Result<(Matrix, Matrix)> {
    if labels.len() != features.cols() {
        return Err(JipError::invalid("scatter: labels do not match sample count"));
    }
    let labels: Vec<u32> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| JipError::invalid(format!("scatter: sample {i} is unlabeled"))))
        .collect::<Result<_>>()?;
    scatter_from_classes(features, &labels)
}

pub(crate) fn scatter_from_classes(features: &Matrix, labels: &[u32]) -> Result<(Matrix, Matrix)> {
    let (d, n) = features.shape();
    if n == 0 {
        return Err(JipError::invalid("scatter: no samples"));
    }
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let mean_of = |idx: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; d];
        for &j in idx {
            for (mi, i) in m.iter_mut().zip(0..d) {
                *mi += features[(i, j)];
            }
        }
        m.iter_mut().for_each(|v| *v /= idx.len() as f64);
        m
    };
    let all: Vec<usize> = (0..n).collect();
    let mu = mean_of(&all);

    let mut sw = Matrix::zeros(d, d);
    let mut sb = Matrix::zeros(d, d);
    let mut buf = vec![0.0; d];
    for c in classes {
        let idx: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
        let mu_c = mean_of(&idx);
        for &j in &idx {
            for i in 0..d {
                buf[i] = features[(i, j)] - mu_c[i];
            }
            outer_accumulate(&mut sw, &buf, 1.0);
        }
        for i in 0..d {
            buf[i] = mu_c[i] - mu[i];
        }
        outer_accumulate(&mut sb, &buf, idx.len() as f64);
    }
    sw.symmetrize();
    sb.symmetrize();
    Ok((sw, sb))
}

/// `S_w = blockdiag(S_sw, S_tw)`, `S_b = blockdiag(S_sb, S_tb)`.
pub fn assemble_scatter_blocks(
    source: (&Matrix, &Matrix),
    target: (&Matrix, &Matrix),
) -> Result<(Matrix, Matrix)> {
    let (sw_s, sb_s) = source;
    let (sw_t, sb_t) = target;
    for m in [sw_s, sb_s, sw_t, sb_t] {
        if !m.is_square() {
            return Err(JipError::invalid("scatter blocks must be square"));
        }
    }
    if sw_s.rows() != sb_s.rows() || sw_t.rows() != sb_t.rows() {
        return Err(JipError::invalid("scatter blocks of one domain must share a dimension"));
    }
    Ok((
        assemble_block_diag(&[sw_s, sw_t])?,
        assemble_block_diag(&[sb_s, sb_t])?,
    ))
}

/// Laplacian, adjacency and scatter blocks for one labelling of both domains.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureSet {
    pub laplacian: Matrix,
    pub adjacency: Matrix,
    pub sw: Matrix,
    pub sb: Matrix,
}

impl StructureSet {
    pub fn build(x_s: &Matrix, y_s: &[u32], x_t: &Matrix, y_t: &[u32], k: usize) -> Result<Self> {
        let adjacency = build_adjacency(x_s, y_s, x_t, y_t, k)?;
        let laplacian = laplacian(&adjacency)?;
        let (sw_s, sb_s) = scatter_from_classes(x_s, y_s)?;
        let (sw_t, sb_t) = scatter_from_classes(x_t, y_t)?;
        let (sw, sb) = assemble_scatter_blocks((&sw_s, &sb_s), (&sw_t, &sb_t))?;
        Ok(StructureSet {
            laplacian,
            adjacency,
            sw,
            sb,
        })
    }
}
