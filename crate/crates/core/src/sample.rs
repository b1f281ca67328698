//! Seeded random instances: networks with a prescribed contraction profile,
//! Hopfield models, and starting points. Used by property sweeps, benches,
//! and the multi-start options of the command-line tool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activations::{Activation, ActivationKind};
use crate::error::Result;
use crate::hopfield::HopfieldModel;
use crate::linalg::{spectral_norm, BlockVector, Matrix, NormOptions, Vector};
use crate::network::{Layer, Network};

/// How the per-layer weight norms of a sampled network are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormProfile {
    /// Norms drawn from `[0.3, 1.7]`, then rescaled so their product is `theta`.
    Product { theta: f64 },
    /// Every norm drawn uniformly from `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkShape {
    pub min_layers: usize,
    pub max_layers: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    pub bias_scale: f64,
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self {
            min_layers: 1,
            max_layers: 4,
            min_dim: 1,
            max_dim: 5,
            bias_scale: 1.0,
        }
    }
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }

    pub fn vector(&mut self, dim: usize, scale: f64) -> Vector {
        Vector::new((0..dim).map(|_| self.rng.random_range(-scale..=scale)).collect())
            .expect("dim >= 1 and finite entries")
    }

    pub fn block_vector(&mut self, dims: &[usize], scale: f64) -> BlockVector {
        BlockVector::new(dims.iter().map(|d| self.vector(*d, scale)).collect()).expect("at least one block")
    }

    /// Entries uniform in `[-1, 1]`.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| self.rng.random_range(-1.0..=1.0)).collect();
        Matrix::from_row_major(rows, cols, data).expect("non-empty finite matrix")
    }

    /// A random matrix rescaled to spectral norm `target`.
    pub fn matrix_with_norm(&mut self, rows: usize, cols: usize, target: f64) -> Result<Matrix> {
        let m = self.matrix(rows, cols);
        let norm = spectral_norm(&m, &NormOptions::default())?;
        if norm == 0.0 {
            return Ok(m);
        }
        let scale = target / norm;
        let data = (0..rows).flat_map(|i| m.row(i).iter().map(move |x| x * scale)).collect();
        Matrix::from_row_major(rows, cols, data)
    }

    /// A catalog member with a random parameter in `[0.05, 1]`.
    pub fn activation(&mut self) -> Activation {
        let kind = ActivationKind::ALL[self.rng.random_range(0..ActivationKind::ALL.len())];
        let param = kind.takes_param().then(|| self.rng.random_range(0.05..=1.0));
        Activation::new(kind, param).expect("parameter drawn from a positive range")
    }

    /// A recurrent network (`d_n = d_0`) with the requested norm profile.
    pub fn network(&mut self, shape: &NetworkShape, profile: NormProfile) -> Result<Network> {
        let n = self.rng.random_range(shape.min_layers..=shape.max_layers);
        let mut dims: Vec<usize> = (0..n)
            .map(|_| self.rng.random_range(shape.min_dim..=shape.max_dim))
            .collect();
        dims.insert(0, dims[n - 1]);

        let mut norms: Vec<f64> = match profile {
            NormProfile::Product { .. } => (0..n).map(|_| self.uniform(0.3, 1.7)).collect(),
            NormProfile::Uniform { lo, hi } => (0..n).map(|_| self.uniform(lo, hi)).collect(),
        };
        if let NormProfile::Product { theta } = profile {
            let product: f64 = norms.iter().product();
            let scale = (theta / product).powf(1.0 / n as f64);
            norms.iter_mut().for_each(|x| *x *= scale);
        }

        let layers = (0..n)
            .map(|i| {
                let weights = self.matrix_with_norm(dims[i + 1], dims[i], norms[i])?;
                let bias = self.vector(dims[i + 1], shape.bias_scale);
                Layer::new(weights, bias, self.activation())
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(layers)
    }

    /// Same as [`Sampler::network`] with every bias set to zero.
    pub fn network_without_bias(&mut self, shape: &NetworkShape, profile: NormProfile) -> Result<Network> {
        let net = self.network(shape, profile)?;
        let layers = net
            .layers()
            .iter()
            .map(|l| Layer::new(l.weights().clone(), Vector::zeros(l.output_dim()), *l.activation()))
            .collect::<Result<Vec<_>>>()?;
        Network::new(layers)
    }

    /// A Hopfield model with `d_i` in `[1, 2]` and `|D^{-1} W| = kappa`.
    pub fn hopfield(&mut self, max_blocks: usize, max_block_dim: usize, kappa: f64, bias_scale: f64) -> Result<HopfieldModel> {
        let n = self.rng.random_range(1..=max_blocks);
        let block_dims: Vec<usize> = (0..n).map(|_| self.rng.random_range(1..=max_block_dim)).collect();
        let total: usize = block_dims.iter().sum();
        let d: Vec<f64> = (0..n).map(|_| self.uniform(1.0, 2.0)).collect();
        let activations = (0..n).map(|_| self.activation()).collect();
        let raw = self.matrix(total, total);
        let bias = self.vector(total, bias_scale);
        let probe = HopfieldModel::new(d.clone(), block_dims.clone(), raw.clone(), bias.clone(), activations)?;
        let current = probe.contraction_factor(&NormOptions::default())?;
        let scale = if current > 0.0 { kappa / current } else { 1.0 };
        let rows = raw.to_rows().into_iter().map(|r| r.into_iter().map(|x| x * scale).collect()).collect();
        HopfieldModel::new(d, block_dims, Matrix::from_rows(rows)?, bias, probe.activations().to_vec())
    }
}
