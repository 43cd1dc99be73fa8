//! Seeded synthetic two-domain benchmark with known ground truth.
//!
//! Each class has a centre in a shared latent space. A sample's latent point
//! is its class centre plus isotropic Gaussian spread; the two domains see
//! latent points through fixed random linear maps plus independent feature
//! noise. Paired samples share a single latent point. In the target domain
//! only paired samples carry labels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{DomainData, HeteroDataset, Label};
use crate::error::{JipError, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub class_count: u32,
    pub latent_dim: usize,
    pub samples_per_domain: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    /// Standard deviation of both the latent spread and the feature noise.
    pub noise_sigma: f64,
    pub pair_fraction: f64,
    /// Minimum pairwise distance between latent class centres.
    pub class_separation: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            class_count: 4,
            latent_dim: 5,
            samples_per_domain: 100,
            source_dim: 30,
            target_dim: 20,
            noise_sigma: 0.3,
            pair_fraction: 0.3,
            class_separation: 0.5,
        }
    }
}

impl SynthSpec {
    /// `⌈pair_fraction · n⌉`.
    pub fn pair_count(&self) -> usize {
        // The small offset keeps e.g. 0.3 * 100 = 30.000000000000004 at 30.
        ((self.pair_fraction * self.samples_per_domain as f64) - 1e-9).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(JipError::invalid(format!("synthetic spec: {m}")));
        if self.class_count == 0 {
            return fail("class_count must be at least 1");
        }
        if self.latent_dim == 0 {
            return fail("latent_dim must be at least 1");
        }
        if self.latent_dim > self.source_dim.min(self.target_dim) {
            return fail("latent_dim exceeds a domain dimension");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise_sigma must be finite and non-negative");
        }
        if !(self.pair_fraction > 0.0 && self.pair_fraction <= 1.0) {
            return fail("pair_fraction must lie in (0, 1]");
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return fail("class_separation must be positive");
        }
        if self.pair_count() < self.class_count as usize {
            return fail("fewer pairs than classes");
        }
        Ok(())
    }
}

/// A generated dataset plus the hidden labels of every target sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticBenchmark {
    pub dataset: HeteroDataset,
    pub target_truth: Vec<u32>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn class_centres(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let sep = spec.class_separation;
    let mut spread = sep;
    let mut centres: Vec<Vec<f64>> = Vec::new();
    let mut attempts = 0;
    while centres.len() < spec.class_count as usize {
        let c: Vec<f64> = (0..spec.latent_dim).map(|_| spread * gaussian(rng)).collect();
        let far_enough = centres.iter().all(|o| {
            let d2: f64 = o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() >= sep
        });
        if far_enough {
            centres.push(c);
        } else {
            attempts += 1;
            if attempts % 1000 == 0 {
                spread *= 1.5;
            }
        }
    }
    centres
}

fn random_map(rows: usize, latent: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let s = 1.0 / (latent as f64).sqrt();
    Matrix::from_fn(rows, latent, |_, _| s * gaussian(rng))
}

fn latent_point(centre: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    centre.iter().map(|c| c + sigma * gaussian(rng)).collect()
}

fn observe(map: &Matrix, z: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    map.matvec(z).into_iter().map(|v| v + sigma * gaussian(rng)).collect()
}

/// Generates a benchmark. Deterministic in `(spec, seed)`.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<SyntheticBenchmark> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.samples_per_domain;
    let classes = spec.class_count as usize;
    let n_pairs = spec.pair_count();
    let sigma = spec.noise_sigma;

    let centres = class_centres(spec, &mut rng);
    let map_s = random_map(spec.source_dim, spec.latent_dim, &mut rng);
    let map_t = random_map(spec.target_dim, spec.latent_dim, &mut rng);

    // Round-robin class assignment keeps classes balanced within the pairs
    // and within each domain as a whole.
    let class_of = |k: usize| (k % classes) as u32 + 1;

    let mut src_cols = Vec::with_capacity(n);
    let mut tgt_cols = Vec::with_capacity(n);
    for k in 0..n_pairs {
        let z = latent_point(&centres[k % classes], sigma, &mut rng);
        src_cols.push(observe(&map_s, &z, sigma, &mut rng));
        tgt_cols.push(observe(&map_t, &z, sigma, &mut rng));
    }
    for k in n_pairs..n {
        let z = latent_point(&centres[k % classes], sigma, &mut rng);
        src_cols.push(observe(&map_s, &z, sigma, &mut rng));
    }
    for k in n_pairs..n {
        let z = latent_point(&centres[k % classes], sigma, &mut rng);
        tgt_cols.push(observe(&map_t, &z, sigma, &mut rng));
    }

    let mut src_pos: Vec<usize> = (0..n).collect();
    let mut tgt_pos: Vec<usize> = (0..n).collect();
    src_pos.shuffle(&mut rng);
    tgt_pos.shuffle(&mut rng);

    let mut xs = Matrix::zeros(spec.source_dim, n);
    let mut xt = Matrix::zeros(spec.target_dim, n);
    let mut ys: Vec<Label> = vec![None; n];
    let mut yt: Vec<Label> = vec![None; n];
    let mut truth = vec![0u32; n];
    for k in 0..n {
        xs.set_column(src_pos[k], &src_cols[k]);
        xt.set_column(tgt_pos[k], &tgt_cols[k]);
        ys[src_pos[k]] = Some(class_of(k));
        truth[tgt_pos[k]] = class_of(k);
        if k < n_pairs {
            yt[tgt_pos[k]] = Some(class_of(k));
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..n_pairs).map(|k| (src_pos[k], tgt_pos[k])).collect();
    pairs.sort_unstable();

    let dataset = HeteroDataset::new(
        DomainData::new(xs, ys)?,
        DomainData::new(xt, yt)?,
        pairs,
        spec.class_count,
    )?;
    Ok(SyntheticBenchmark {
        dataset,
        target_truth: truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_count_rounding() {
        let spec = SynthSpec::default();
        assert_eq!(spec.pair_count(), 30);
        let odd = SynthSpec {
            samples_per_domain: 101,
            ..SynthSpec::default()
        };
        assert_eq!(odd.pair_count(), 31);
    }

    #[test]
    fn spec_violations() {
        let bad = [
            SynthSpec {
                latent_dim: 25,
                ..SynthSpec::default()
            },
            SynthSpec {
                pair_fraction: 0.0,
                ..SynthSpec::default()
            },
            SynthSpec {
                pair_fraction: 0.02,
                ..SynthSpec::default()
            },
            SynthSpec {
                class_separation: 0.0,
                ..SynthSpec::default()
            },
            SynthSpec {
                noise_sigma: -1.0,
                ..SynthSpec::default()
            },
        ];
        for spec in bad {
            assert!(matches!(synth_generate(&spec, 0), Err(JipError::InvalidArgument(_))), "{spec:?}");
        }
    }

    #[test]
    fn centres_are_separated() {
        let spec = SynthSpec {
            class_count: 8,
            latent_dim: 2,
            class_separation: 3.0,
            ..SynthSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = class_centres(&spec, &mut rng);
        for i in 0..c.len() {
            for j in 0..i {
                let d: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!(d >= 3.0);
            }
        }
    }
}
