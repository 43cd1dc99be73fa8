//! Symmetric and symmetric-generalized eigensolvers.
//!
//! [`sym_eig`] is a Householder tridiagonalisation followed by implicit-shift
//! QL iteration (the classic EISPACK `tred2`/`tql2` pair). The generalized
//! solver reduces `lhs·w = φ·rhs·w` to a standard problem through a Cholesky
//! factor of whichever side can be made positive definite.

use crate::error::{JipError, Result};
use crate::matrix::{norm, Matrix};

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with unit-norm eigenvectors in the
/// matching columns of `vectors`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which eigenvalues count as "the m smallest".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EigenSelection {
    /// The m algebraically smallest finite eigenvalues.
    #[default]
    SmallestAlgebraic,
    /// The m smallest eigenvalues among pairs whose eigenvector has a
    /// positive constraint form `wᵀ·rhs·w > 0`. Identical to
    /// `SmallestAlgebraic` whenever the regularised rhs is positive definite.
    SmallestPositive,
}

impl std::str::FromStr for EigenSelection {
    type Err = JipError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smallest_algebraic" | "algebraic" => Ok(EigenSelection::SmallestAlgebraic),
            "smallest_positive" | "positive" => Ok(EigenSelection::SmallestPositive),
            other => Err(JipError::invalid(format!("unknown eigen selection {other:?}"))),
        }
    }
}

impl std::fmt::Display for EigenSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EigenSelection::SmallestAlgebraic => "smallest_algebraic",
            EigenSelection::SmallestPositive => "smallest_positive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenEigOptions {
    /// Ridge added to the rhs. Zero selects the automatic escalation policy.
    pub ridge: f64,
    pub selection: EigenSelection,
}

impl Default for GenEigOptions {
    fn default() -> Self {
        GenEigOptions {
            ridge: 0.0,
            selection: EigenSelection::SmallestAlgebraic,
        }
    }
}

/// Which matrix supplied the Cholesky factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// `rhs + rhs_ridge·I` was positive definite.
    Rhs,
    /// The rhs stayed indefinite; the pencil was solved with
    /// `lhs + lhs_ridge·I` as the metric instead.
    Lhs,
}

/// Result of [`solve_generalized`]. The returned pairs satisfy
/// `(lhs + lhs_ridge·I)·w = φ·(rhs + rhs_ridge·I)·w`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedEigen {
    pub pairs: EigenPairs,
    pub rhs_ridge: f64,
    pub lhs_ridge: f64,
    pub reduction: Reduction,
}

/// Full eigendecomposition of a symmetric matrix, values ascending.
pub fn sym_eig(m: &Matrix) -> Result<EigenPairs> {
    if !m.is_square() {
        return Err(JipError::invalid(format!(
            "sym_eig needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(JipError::invalid(format!(
            "sym_eig input is not symmetric (max asymmetry {:e})",
            m.asymmetry()
        )));
    }
    if !m.is_finite() {
        return Err(JipError::invalid("sym_eig input has non-finite entries"));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let mut sym = m.clone();
    sym.symmetrize();
    let mut v = sym.into_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let mut col: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
        normalize_column(&mut col);
        vectors.set_column(j, &col);
    }
    Ok(EigenPairs { values, vectors })
}

/// The `m` smallest eigenpairs of `lhs·w = φ·(rhs + ridge·I)·w`.
///
/// A zero `ridge` means: use `rhs` unchanged if it is positive definite,
/// otherwise escalate a ridge of `10⁻⁶·trace(rhs)/d` by factors of ten up to
/// `10⁻²·trace(rhs)/d`.
pub fn gen_eig_smallest(lhs: &Matrix, rhs: &Matrix, m: usize, ridge: f64) -> Result<EigenPairs> {
    let opts = GenEigOptions {
        ridge,
        ..GenEigOptions::default()
    };
    solve_generalized(lhs, rhs, m, &opts).map(|g| g.pairs)
}

/// Generalized symmetric eigensolver with explicit selection policy.
///
/// If the rhs cannot be made positive definite by the ridge policy, and the
/// lhs can (it is positive semidefinite in every use inside this crate), the
/// pencil is solved the other way round: `rhs·w = μ·lhs_reg·w`, `φ = 1/μ`.
/// Pairs with `|μ|` below `10⁻⁹·max|μ|` are treated as infinite eigenvalues
/// and dropped.
pub fn solve_generalized(
    lhs: &Matrix,
    rhs: &Matrix,
    m: usize,
    opts: &GenEigOptions,
) -> Result<GeneralizedEigen> {
    let d = lhs.rows();
    for (name, mat) in [("lhs", lhs), ("rhs", rhs)] {
        if mat.shape() != (d, d) {
            return Err(JipError::invalid(format!(
                "{name} is {}x{}, expected {d}x{d}",
                mat.rows(),
                mat.cols()
            )));
        }
        if !mat.is_symmetric(SYMMETRY_TOL) {
            return Err(JipError::invalid(format!("{name} is not symmetric")));
        }
        if !mat.is_finite() {
            return Err(JipError::invalid(format!("{name} has non-finite entries")));
        }
    }
    if m == 0 || m > d {
        return Err(JipError::invalid(format!(
            "cannot select {m} eigenpairs from a {d}x{d} problem"
        )));
    }
    if !(opts.ridge >= 0.0 && opts.ridge.is_finite()) {
        return Err(JipError::invalid("ridge must be finite and non-negative"));
    }

    let rhs_ladder: Vec<f64> = if opts.ridge > 0.0 {
        vec![opts.ridge]
    } else {
        let s = ridge_scale(rhs);
        std::iter::once(0.0)
            .chain((0..5).map(|k| s * 1e-6 * 10f64.powi(k)))
            .collect()
    };
    for &r in &rhs_ladder {
        let mut rhs_reg = rhs.clone();
        rhs_reg.add_diagonal(r);
        if let Some(chol) = cholesky(&rhs_reg) {
            let pairs = reduce_and_solve(&chol, lhs)?;
            let values = pairs.values.clone();
            let keep: Vec<usize> = (0..values.len()).collect();
            return finish(pairs, &keep, m, r, 0.0, Reduction::Rhs);
        }
    }

    // The rhs stays indefinite: swap roles and factor the lhs instead.
    let rhs_ridge = opts.ridge;
    let mut rhs_reg = rhs.clone();
    rhs_reg.add_diagonal(rhs_ridge);
    let s = ridge_scale(lhs);
    for k in 0..7 {
        let lr = s * 1e-8 * 10f64.powi(k);
        let mut lhs_reg = lhs.clone();
        lhs_reg.add_diagonal(lr);
        let Some(chol) = cholesky(&lhs_reg) else {
            continue;
        };
        let inv = reduce_and_solve(&chol, &rhs_reg)?;
        let mu_max = inv.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let cutoff = 1e-9 * mu_max;
        let mut phi = Vec::with_capacity(d);
        for &mu in &inv.values {
            phi.push(if mu.abs() > cutoff { 1.0 / mu } else { f64::INFINITY });
        }
        let mut order: Vec<usize> = (0..d).filter(|&i| phi[i].is_finite()).collect();
        if opts.selection == EigenSelection::SmallestPositive {
            order.retain(|&i| inv.values[i] > 0.0);
        }
        order.sort_by(|&a, &b| phi[a].total_cmp(&phi[b]).then(a.cmp(&b)));
        let pairs = EigenPairs {
            values: phi,
            vectors: inv.vectors,
        };
        return finish(pairs, &order, m, rhs_ridge, lr, Reduction::Lhs);
    }
    Err(JipError::NumericFailure(
        "neither side of the generalized eigenproblem could be made positive definite".into(),
    ))
}

fn finish(
    pairs: EigenPairs,
    order: &[usize],
    m: usize,
    rhs_ridge: f64,
    lhs_ridge: f64,
    reduction: Reduction,
) -> Result<GeneralizedEigen> {
    if order.len() < m {
        return Err(JipError::ReducedRank {
            requested: m,
            achievable: order.len(),
        });
    }
    let picked = &order[..m];
    let values: Vec<f64> = picked.iter().map(|&i| pairs.values[i]).collect();
    let vectors = pairs.vectors.select_columns(picked);
    if values.iter().any(|v| !v.is_finite()) || !vectors.is_finite() {
        return Err(JipError::NumericFailure(
            "generalized eigensolve produced non-finite output".into(),
        ));
    }
    Ok(GeneralizedEigen {
        pairs: EigenPairs { values, vectors },
        rhs_ridge,
        lhs_ridge,
        reduction,
    })
}

/// Solves `a·w = φ·(L·Lᵀ)·w` for all pairs, values ascending, w unit norm.
fn reduce_and_solve(chol: &Cholesky, a: &Matrix) -> Result<EigenPairs> {
    let d = a.rows();
    // K = L⁻¹ · a · L⁻ᵀ = L⁻¹ · (L⁻¹ · a)ᵀ for symmetric a.
    let mut y = a.clone();
    chol.forward_columns(&mut y);
    let mut k = y.transpose();
    chol.forward_columns(&mut k);
    k.symmetrize();
    let std = sym_eig(&k)?;
    let mut vectors = Matrix::zeros(d, d);
    for j in 0..d {
        let mut w = std.vectors.column(j);
        chol.backward_transposed(&mut w);
        normalize_column(&mut w);
        vectors.set_column(j, &w);
    }
    Ok(EigenPairs {
        values: std.values,
        vectors,
    })
}

/// Positive scale used to size ridges: mean diagonal when positive, otherwise
/// the RMS entry size, otherwise one.
fn ridge_scale(m: &Matrix) -> f64 {
    let d = m.rows().max(1) as f64;
    let t = m.trace() / d;
    if t > 0.0 {
        return t;
    }
    let f = m.frobenius_norm() / d;
    if f > 0.0 {
        f
    } else {
        1.0
    }
}

/// Unit norm, sign fixed so the largest-magnitude entry is positive.
fn normalize_column(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lower-triangular Cholesky factor, row-major.
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

/// Returns `None` unless every pivot is positive relative to the diagonal.
pub(crate) fn cholesky(a: &Matrix) -> Option<Cholesky> {
    let n = a.rows();
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
    let floor = 1e-14 * max_diag;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= l[j * n + k] * l[j * n + k];
        }
        if s.is_nan() || s <= floor || !s.is_finite() {
            return None;
        }
        let pivot = s.sqrt();
        l[j * n + j] = pivot;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / pivot;
        }
    }
    Some(Cholesky { n, l })
}

impl Cholesky {
    /// Overwrites every column `b` of `m` with `L⁻¹·b`.
    fn forward_columns(&self, m: &mut Matrix) {
        let n = self.n;
        let cols = m.cols();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                if lik == 0.0 {
                    continue;
                }
                for j in 0..cols {
                    let v = m[(k, j)];
                    m[(i, j)] -= lik * v;
                }
            }
            let inv = 1.0 / self.l[i * n + i];
            m.row_mut(i).iter_mut().for_each(|x| *x *= inv);
        }
    }

    /// Solves `Lᵀ·x = b` in place.
    #[allow(clippy::needless_range_loop)]
    fn backward_transposed(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Householder reduction to tridiagonal form. On exit `v` holds the
/// orthogonal transform, `d` the diagonal and `e[1..]` the sub-diagonal.
#[allow(clippy::needless_range_loop)]
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal form, accumulating into `v`.
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let at = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(JipError::NumericFailure(format!(
                        "QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[at(k, i + 1)];
                        let vk = v[at(k, i)];
                        v[at(k, i + 1)] = s * vk + c * vk1;
                        v[at(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
