//! Fixtures shared by the criterion benchmarks.

use jip_core::{synth_generate, Matrix, SynthSpec, SyntheticBenchmark};

/// Dense symmetric matrix with a reproducible, well-spread spectrum.
pub fn symmetric(d: usize) -> Matrix {
    let mut m = Matrix::from_fn(d, d, |i, j| ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5);
    m = m.add(&m.transpose()).expect("square");
    m.symmetrize();
    m
}

/// `GᵀG + I`, positive definite.
pub fn spd(d: usize) -> Matrix {
    let g = Matrix::from_fn(d, d, |i, j| ((i * 11 + j * 5 + 3) % 19) as f64 / 19.0 - 0.5);
    let mut s = g.t_matmul(&g).expect("square");
    s.add_diagonal(1.0);
    s.symmetrize();
    s
}

/// The default synthetic benchmark at a given per-domain sample count.
pub fn synthetic(samples_per_domain: usize) -> SyntheticBenchmark {
    let spec = SynthSpec {
        samples_per_domain,
        ..SynthSpec::default()
    };
    synth_generate(&spec, 0).expect("valid spec")
}
