use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::Matrix;

/// Shape of a clustered Gaussian feature collection.
#[derive(Clone, Copy, Debug)]
pub struct ClusteredSpec {
    pub rows: usize,
    pub dim: usize,
    pub groups: usize,
    /// Rank of the subspace holding the group centres.
    pub latent: usize,
    /// Isotropic noise around each centre.
    pub spread: f64,
}

impl Default for ClusteredSpec {
    fn default() -> Self {
        ClusteredSpec {
            rows: 10_000,
            dim: 332,
            groups: 1000,
            latent: 32,
            spread: 0.5,
        }
    }
}

/// Gaussian mixture whose centres lie on a random low-rank subspace.
pub fn clustered_gaussian(spec: ClusteredSpec, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ClusteredSpec {
        rows,
        dim,
        groups,
        latent,
        spread,
    } = spec;
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let basis: Vec<f64> = (0..latent * dim).map(|_| normal()).collect();
    let centres: Vec<Vec<f64>> = (0..groups.max(1))
        .map(|_| {
            let z: Vec<f64> = (0..latent).map(|_| normal()).collect();
            (0..dim).map(|j| (0..latent).map(|l| z[l] * basis[l * dim + j]).sum()).collect()
        })
        .collect();
    let mut data = Vec::with_capacity(rows * dim);
    for _ in 0..rows {
        let c = &centres[rng.random_range(0..centres.len())];
        for &v in c {
            let e: f64 = StandardNormal.sample(&mut rng);
            data.push((v + spread * e) as f32);
        }
    }
    Matrix::from_vec(rows, dim, data).expect("sizes agree")
}

/// Independent standard normal rows.
pub fn iid_gaussian(rows: usize, dim: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * dim)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            x as f32
        })
        .collect();
    Matrix::from_vec(rows, dim, data).expect("sizes agree")
}
