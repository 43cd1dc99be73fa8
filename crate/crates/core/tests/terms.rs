mod common;

use common::*;
use jip_core::eigen::sym_eig;
use jip_core::matrix::{assemble_block_diag, centering_matrix};
use jip_core::terms::{
    assemble_scatter_blocks, build_adjacency, correlation_matrix, laplacian, mmd_conditional,
    mmd_marginal, scatter_matrices, MmdSet,
};
use jip_core::Matrix;
use rand::Rng;

struct Instance {
    xs: Matrix,
    xt: Matrix,
    ys: Vec<u32>,
    yt: Vec<u32>,
    a: Matrix,
    b: Matrix,
    x: Matrix,
    w: Matrix,
}

fn instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let (ds, dt) = (r.gen_range(1..=20), r.gen_range(1..=20));
    let (ns, nt) = (r.gen_range(1..=30), r.gen_range(1..=30));
    let m = r.gen_range(1..=6);
    let xs = random_matrix(&mut r, ds, ns);
    let xt = random_matrix(&mut r, dt, nt);
    let ys = random_labels(&mut r, ns, 3);
    let yt = random_labels(&mut r, nt, 3);
    let a = random_matrix(&mut r, ds, m);
    let b = random_matrix(&mut r, dt, m);
    let x = assemble_block_diag(&[&xs, &xt]).unwrap();
    let w = a.vstack(&b).unwrap();
    Instance { xs, xt, ys, yt, a, b, x, w }
}

fn xmxt_trace(inst: &Instance, m: &Matrix) -> f64 {
    let inner = inst.x.matmul(m).unwrap().matmul_t(&inst.x).unwrap();
    inner.trace_quadratic(&inst.w).unwrap()
}

#[test]
fn marginal_mmd_matches_mean_difference() {
    for seed in 0..50 {
        let inst = instance(seed);
        let m0 = mmd_marginal(inst.xs.cols(), inst.xt.cols()).unwrap();
        let got = xmxt_trace(&inst, &m0);
        let want = marginal_mmd_direct(&inst.a, &inst.b, &inst.xs, &inst.xt);
        assert!(rel_err(got, want) <= 1e-10, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn conditional_mmd_matches_class_mean_difference() {
    for seed in 100..150 {
        let inst = instance(seed);
        for c in 1..=3 {
            let mc = mmd_conditional(&inst.ys, &inst.yt, c);
            let got = xmxt_trace(&inst, &mc);
            let want = conditional_mmd_direct(&inst.a, &inst.b, &inst.xs, &inst.ys, &inst.xt, &inst.yt, c);
            if want == 0.0 {
                assert!(mc.is_zero() || got.abs() < 1e-14);
            } else {
                assert!(rel_err(got, want) <= 1e-10, "seed {seed} class {c}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn correlation_trace_matches_paired_cross_covariance() {
    for seed in 200..250 {
        let mut r = rng(seed);
        let (ds, dt, np, m) = (r.gen_range(1..=20), r.gen_range(1..=20), r.gen_range(1..=30), r.gen_range(1..=5));
        let xsp = random_matrix(&mut r, ds, np);
        let xtp = random_matrix(&mut r, dt, np);
        let a = random_matrix(&mut r, ds, m);
        let b = random_matrix(&mut r, dt, m);
        let c = correlation_matrix(&xsp, &xtp).unwrap();
        let got = c.trace_quadratic(&a.vstack(&b).unwrap()).unwrap();

        let h = explicit_centering(np);
        let cross = xsp.matmul(&h).unwrap().matmul_t(&xtp).unwrap();
        let t1 = a.t_matmul(&cross).unwrap().matmul(&b).unwrap().trace();
        let t2 = b.t_matmul(&cross.transpose()).unwrap().matmul(&a).unwrap().trace();
        let want = t1 + t2;
        let scale = want.abs().max(1.0);
        assert!((got - want).abs() <= 1e-12 * scale, "seed {seed}: {got} vs {want}");
        assert!((got - 2.0 * t1).abs() <= 1e-12 * scale);
    }
}

#[test]
fn laplacian_matches_pairwise_distances() {
    for seed in 300..350 {
        let inst = instance(seed);
        let mut r = rng(seed + 10_000);
        let n = inst.x.cols();
        let adj = random_graph(&mut r, n);
        let l = laplacian(&adj).unwrap();
        let got = xmxt_trace(&inst, &l);
        let want = locality_direct(&inst.a, &inst.b, &inst.xs, &inst.xt, &adj);
        if want == 0.0 {
            assert!(got.abs() < 1e-12);
        } else {
            assert!(rel_err(got, want) <= 1e-10, "seed {seed}: {got} vs {want}");
        }
    }
}

#[test]
fn laplacian_of_discriminative_graph_is_psd() {
    for seed in 400..420 {
        let inst = instance(seed);
        let adj = build_adjacency(&inst.xs, &inst.ys, &inst.xt, &inst.yt, 10).unwrap();
        let l = laplacian(&adj).unwrap();
        assert_eq!(l.asymmetry(), 0.0);
        assert!(l.row_sums().iter().all(|s| s.abs() <= 1e-10));
        let min = sym_eig(&l).unwrap().values[0];
        assert!(min >= -1e-10 * l.frobenius_norm().max(1e-300), "seed {seed}: {min}");
        let ns = inst.xs.cols();
        for i in 0..ns {
            for j in ns..adj.cols() {
                assert_eq!(adj[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn mmd_matrices_have_zero_row_sums_and_symmetry() {
    for seed in 500..550 {
        let inst = instance(seed);
        let set = MmdSet::build(&inst.ys, &inst.yt, 4).unwrap();
        for m in std::iter::once(&set.m0).chain(&set.per_class) {
            assert!(m.asymmetry() <= 1e-12);
            assert!(m.row_sums().iter().all(|s| s.abs() <= 1e-12));
        }
        // Class 4 never occurs.
        assert!(set.per_class[3].is_zero());
        assert_eq!(set.class_counts[3], (0, 0));
    }
}

#[test]
fn scatter_total_identity() {
    for seed in 600..650 {
        let mut r = rng(seed);
        let (d, n) = (r.gen_range(1..=20), r.gen_range(2..=30));
        let x = random_matrix(&mut r, d, n);
        let y = random_labels(&mut r, n, 4);
        let labels: Vec<_> = y.iter().map(|&c| Some(c)).collect();
        let (sw, sb) = scatter_matrices(&x, &labels).unwrap();
        let total = total_scatter(&x);
        let err = sw.add(&sb).unwrap().sub(&total).unwrap().frobenius_norm() / total.frobenius_norm();
        assert!(err <= 1e-10, "seed {seed}: {err}");
        let sw_oracle = within_scatter_matrix(&x, &y);
        assert!(sw.sub(&sw_oracle).unwrap().frobenius_norm() <= 1e-10 * sw_oracle.frobenius_norm().max(1e-300));
        for m in [&sw, &sb] {
            let min = sym_eig(m).unwrap().values[0];
            assert!(min >= -1e-8 * m.frobenius_norm());
        }
    }
}

#[test]
fn scatter_blocks_preserve_psd() {
    let mut r = rng(7);
    for _ in 0..20 {
        let (ds, dt) = (r.gen_range(1..=8), r.gen_range(1..=8));
        let g1 = random_matrix(&mut r, ds, 3);
        let g2 = random_matrix(&mut r, dt, 3);
        let p1 = g1.matmul_t(&g1).unwrap();
        let p2 = g2.matmul_t(&g2).unwrap();
        let (sw, sb) = assemble_scatter_blocks((&p1, &p1), (&p2, &p2)).unwrap();
        for m in [sw, sb] {
            assert!(sym_eig(&m).unwrap().values[0] >= -1e-12 * m.frobenius_norm());
            for i in 0..ds {
                for j in ds..ds + dt {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
    }
}

#[test]
fn correlation_has_exact_zero_diagonal_blocks() {
    let mut r = rng(8);
    let xsp = random_matrix(&mut r, 4, 9);
    let xtp = random_matrix(&mut r, 3, 9);
    let c = correlation_matrix(&xsp, &xtp).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(c[(i, j)], 0.0);
        }
    }
    for i in 4..7 {
        for j in 4..7 {
            assert_eq!(c[(i, j)], 0.0);
        }
    }
    assert_eq!(c.asymmetry(), 0.0);
}

#[test]
fn centering_matches_explicit_form() {
    for n in 1..20 {
        let h = centering_matrix(n).unwrap();
        assert!(h.sub(&explicit_centering(n)).unwrap().max_abs() <= 1e-15);
    }
}
