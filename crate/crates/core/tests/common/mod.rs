//! Random instance generators and direct-evaluation oracles shared by the
//! integration tests. Nothing here calls the term builders under test.

#![allow(dead_code)]

use jip_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let g = random_matrix(rng, d, d);
    let mut s = g.add(&g.transpose()).unwrap();
    s.symmetrize();
    s
}

/// `GᵀG + d·I`, comfortably positive definite.
pub fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let g = random_matrix(rng, d, d);
    let mut s = g.t_matmul(&g).unwrap();
    s.add_diagonal(d as f64 * 0.1 + 0.5);
    s.symmetrize();
    s
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, classes: u32) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(1..=classes)).collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

fn col(x: &Matrix, j: usize) -> Vec<f64> {
    x.column(j)
}

/// `Mᵀ·v` for a `d × m` matrix.
fn apply_t(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.cols())
        .map(|k| (0..m.rows()).map(|i| m[(i, k)] * v[i]).sum())
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_projection(m: &Matrix, x: &Matrix, idx: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0; m.cols()];
    for &j in idx {
        for (a, v) in acc.iter_mut().zip(apply_t(m, &col(x, j))) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= idx.len() as f64);
    acc
}

/// `‖(1/n_s)ΣAᵀx_i − (1/n_t)ΣBᵀx'_j‖²`.
pub fn marginal_mmd_direct(a: &Matrix, b: &Matrix, xs: &Matrix, xt: &Matrix) -> f64 {
    let s: Vec<usize> = (0..xs.cols()).collect();
    let t: Vec<usize> = (0..xt.cols()).collect();
    sq_dist(&mean_projection(a, xs, &s), &mean_projection(b, xt, &t))
}

/// Class-`c` conditional MMD term, zero when the class is absent on a side.
pub fn conditional_mmd_direct(
    a: &Matrix,
    b: &Matrix,
    xs: &Matrix,
    ys: &[u32],
    xt: &Matrix,
    yt: &[u32],
    c: u32,
) -> f64 {
    let s: Vec<usize> = (0..xs.cols()).filter(|&i| ys[i] == c).collect();
    let t: Vec<usize> = (0..xt.cols()).filter(|&j| yt[j] == c).collect();
    if s.is_empty() || t.is_empty() {
        return 0.0;
    }
    sq_dist(&mean_projection(a, xs, &s), &mean_projection(b, xt, &t))
}

/// `½ Σᵢⱼ ‖zᵢ − zⱼ‖² Wᵢⱼ` with `zᵢ` the projected samples (source first).
pub fn locality_direct(a: &Matrix, b: &Matrix, xs: &Matrix, xt: &Matrix, adj: &Matrix) -> f64 {
    let mut z: Vec<Vec<f64>> = (0..xs.cols()).map(|j| apply_t(a, &col(xs, j))).collect();
    z.extend((0..xt.cols()).map(|j| apply_t(b, &col(xt, j))));
    let mut total = 0.0;
    for i in 0..z.len() {
        for j in 0..z.len() {
            total += sq_dist(&z[i], &z[j]) * adj[(i, j)];
        }
    }
    0.5 * total
}

/// `Σ_c Σ_{i∈c} ‖Aᵀ(xᵢ − μ_c)‖²` for one domain.
pub fn within_scatter_direct(a: &Matrix, x: &Matrix, y: &[u32]) -> f64 {
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut total = 0.0;
    for c in classes {
        let idx: Vec<usize> = (0..x.cols()).filter(|&j| y[j] == c).collect();
        let mu = mean_projection(a, x, &idx);
        for &j in &idx {
            total += sq_dist(&apply_t(a, &col(x, j)), &mu);
        }
    }
    total
}

/// Explicit `H_n` built entry by entry.
pub fn explicit_centering(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| (if i == j { 1.0 } else { 0.0 }) - 1.0 / n as f64)
}

/// Within-class scatter via explicit per-class centering matrices.
pub fn within_scatter_matrix(x: &Matrix, y: &[u32]) -> Matrix {
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut acc = Matrix::zeros(x.rows(), x.rows());
    for c in classes {
        let idx: Vec<usize> = (0..x.cols()).filter(|&j| y[j] == c).collect();
        let xc = x.select_columns(&idx);
        let term = xc.matmul(&explicit_centering(idx.len())).unwrap().matmul_t(&xc).unwrap();
        acc.add_scaled_in_place(1.0, &term);
    }
    acc
}

/// `Σᵢ (xᵢ − μ)(xᵢ − μ)ᵀ` via the global centering matrix.
pub fn total_scatter(x: &Matrix) -> Matrix {
    x.matmul(&explicit_centering(x.cols())).unwrap().matmul_t(x).unwrap()
}

/// Random symmetric non-negative adjacency with zero diagonal.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.3) {
                let v = rng.gen_range(0.0..1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}
