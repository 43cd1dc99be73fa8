mod common;

use common::*;
use jip_core::eigen::{gen_eig_smallest, solve_generalized, sym_eig};
use jip_core::{EigenSelection, GenEigOptions, Matrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn residual(lhs: &Matrix, rhs: &Matrix, phi: f64, w: &[f64]) -> f64 {
    let lw = lhs.matvec(w);
    let rw = rhs.matvec(w);
    lw.iter().zip(&rw).map(|(a, b)| (a - phi * b).powi(2)).sum::<f64>().sqrt()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Real spectrum of `rhs⁻¹·lhs` by explicit inversion, ascending.
fn dense_inverse_spectrum(lhs: &Matrix, rhs: &Matrix) -> Vec<f64> {
    let inv = to_na(rhs).try_inverse().expect("rhs is invertible");
    let prod = inv * to_na(lhs);
    let mut vals: Vec<f64> = prod.complex_eigenvalues().iter().map(|c| c.re).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn symmetric_from(vals: &[f64], d: usize) -> Matrix {
    let mut m = Matrix::from_fn(d, d, |i, j| vals[i * d + j]);
    m = m.add(&m.transpose()).unwrap();
    m.symmetrize();
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sym_eig_residual_and_reconstruction(
        (d, vals) in (1usize..=50).prop_flat_map(|d| (Just(d), prop::collection::vec(-10.0f64..10.0, d * d)))
    ) {
        let m = symmetric_from(&vals, d);
        let eig = sym_eig(&m).unwrap();
        let norm = m.frobenius_norm().max(1e-300);
        for j in 0..d {
            let v = eig.vectors.column(j);
            prop_assert!(residual(&m, &Matrix::identity(d), eig.values[j], &v) <= 1e-9 * norm);
        }
        for w in eig.values.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let gram = eig.vectors.t_matmul(&eig.vectors).unwrap();
        prop_assert!(gram.sub(&Matrix::identity(d)).unwrap().max_abs() <= 1e-10);
        let recon = eig
            .vectors
            .matmul(&Matrix::from_diag(&eig.values))
            .unwrap()
            .matmul_t(&eig.vectors)
            .unwrap();
        prop_assert!(recon.sub(&m).unwrap().frobenius_norm() <= 1e-8 * norm);
    }
}

#[test]
fn sym_eig_residual_20x20() {
    let mut r = rng(20);
    let m = random_symmetric(&mut r, 20);
    let eig = sym_eig(&m).unwrap();
    for j in 0..20 {
        let res = residual(&m, &Matrix::identity(20), eig.values[j], &eig.vectors.column(j));
        assert!(res <= 1e-9 * m.frobenius_norm());
    }
}

#[test]
fn generalized_residual_on_random_spd_problems() {
    for seed in 0..100 {
        let mut r = rng(1000 + seed);
        let d = r.gen_range(1..=60);
        let m = r.gen_range(1..=d);
        let lhs = random_symmetric(&mut r, d);
        let rhs = random_spd(&mut r, d);
        let pairs = gen_eig_smallest(&lhs, &rhs, m, 0.0).unwrap();
        assert_eq!(pairs.values.len(), m);
        for j in 0..m {
            let phi = pairs.values[j];
            let w = pairs.vectors.column(j);
            assert!((jip_core::matrix::norm(&w) - 1.0).abs() <= 1e-12);
            let bound = 1e-8 * (lhs.frobenius_norm() + phi.abs() * rhs.frobenius_norm());
            let res = residual(&lhs, &rhs, phi, &w);
            assert!(res <= bound, "seed {seed} pair {j}: {res} > {bound}");
        }
    }
}

#[test]
fn matches_dense_inverse_spectrum() {
    for seed in 0..10 {
        let mut r = rng(3000 + seed);
        let lhs = random_symmetric(&mut r, 30);
        let rhs = random_spd(&mut r, 30);
        let got = gen_eig_smallest(&lhs, &rhs, 5, 0.0).unwrap().values;
        let want = dense_inverse_spectrum(&lhs, &rhs);
        for (g, w) in got.iter().zip(&want) {
            assert!(rel_err(*g, *w) <= 1e-7, "seed {seed}: {g} vs {w}");
        }
    }
}

#[test]
fn identity_rhs_agrees_with_sym_eig() {
    for seed in 0..20 {
        let mut r = rng(4000 + seed);
        let d = r.gen_range(2..=25);
        let lhs = random_symmetric(&mut r, d);
        let full = sym_eig(&lhs).unwrap();
        let gen = gen_eig_smallest(&lhs, &Matrix::identity(d), d, 0.0).unwrap();
        for j in 0..d {
            assert!((full.values[j] - gen.values[j]).abs() <= 1e-9 * lhs.frobenius_norm());
            let a = full.vectors.column(j);
            let b = gen.vectors.column(j);
            let same = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let flip = a.iter().zip(&b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
            assert!(same.min(flip) <= 1e-9, "seed {seed} pair {j}");
        }
    }
}

#[test]
fn positive_selection_matches_algebraic_for_spd_rhs() {
    let mut r = rng(5);
    let lhs = random_symmetric(&mut r, 12);
    let rhs = random_spd(&mut r, 12);
    let alg = solve_generalized(&lhs, &rhs, 4, &GenEigOptions::default()).unwrap();
    let pos = solve_generalized(
        &lhs,
        &rhs,
        4,
        &GenEigOptions {
            selection: EigenSelection::SmallestPositive,
            ..GenEigOptions::default()
        },
    )
    .unwrap();
    assert_eq!(alg.pairs, pos.pairs);
}

#[test]
fn indefinite_rhs_pairs_satisfy_the_pencil() {
    // PSD lhs with an indefinite rhs: the returned pairs must still solve
    // lhs_reg·w = φ·rhs·w.
    for seed in 0..20 {
        let mut r = rng(6000 + seed);
        let d = r.gen_range(3..=20);
        let lhs = random_spd(&mut r, d);
        let rhs = random_symmetric(&mut r, d);
        let g = solve_generalized(
            &lhs,
            &rhs,
            1,
            &GenEigOptions {
                selection: EigenSelection::SmallestPositive,
                ..GenEigOptions::default()
            },
        )
        .unwrap();
        let mut lhs_reg = lhs.clone();
        lhs_reg.add_diagonal(g.lhs_ridge);
        let mut rhs_reg = rhs.clone();
        rhs_reg.add_diagonal(g.rhs_ridge);
        for j in 0..g.pairs.len() {
            let phi = g.pairs.values[j];
            let w = g.pairs.vectors.column(j);
            let bound = 1e-8 * (lhs_reg.frobenius_norm() + phi.abs() * rhs_reg.frobenius_norm());
            assert!(residual(&lhs_reg, &rhs_reg, phi, &w) <= bound, "seed {seed}");
            let form: f64 = jip_core::matrix::dot(&w, &rhs_reg.matvec(&w));
            assert!(form > 0.0);
        }
    }
}
