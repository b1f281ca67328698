//! The product-space view of a recurrent network.
//!
//! On `H = H_1 x ... x H_n` the trajectories of fixed points are exactly the
//! fixed points of `T = prox_psi o W o S`, where `S` cyclically shifts
//! blocks, `W` applies `W_i` to block `i`, and `psi(x) = phi(x) - <x, b>`.
//! Since the subdifferential of `psi` is that of `phi` shifted by `-b`, the
//! resolvent gives `prox_psi(x) = prox_phi(x + b)`, applied block by block.
//! Equivalently a point solves the inclusion system
//! `b_i in x_i - W_i x_{i-1} + d(phi_i)(x_i)` with `x_0 = x_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, symmetric_eigenvalues, BlockVector, Matrix, NormOptions};
use crate::network::{AnalysisReport, Network, SolverOptions};

/// Largest total dimension for which [`BlockNetwork::check_monotone`]
/// assembles a dense matrix.
pub const DEFAULT_DIM_CAP: usize = 2_000;

/// Minimum eigenvalue threshold for reporting `I - W S` as monotone.
pub const MONOTONE_TOL: f64 = 1e-10;

/// `(x_1, ..., x_n) -> (x_n, x_1, ..., x_{n-1})`.
pub fn shift_apply(x: &BlockVector) -> BlockVector {
    let mut blocks = x.blocks().to_vec();
    blocks.rotate_right(1);
    BlockVector::new(blocks).expect("shift preserves block count")
}

/// A recurrent network seen as an operator on the product space.
#[derive(Debug, Clone)]
pub struct BlockNetwork {
    network: Network,
    bias: BlockVector,
    analysis: AnalysisReport,
}

impl BlockNetwork {
    pub fn new(network: Network, norm: &NormOptions) -> Result<Self> {
        network.require_recurrent()?;
        let analysis = network.analyze(norm)?;
        Ok(Self {
            bias: network.bias_block(),
            network,
            analysis,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn bias(&self) -> &BlockVector {
        &self.bias
    }

    pub fn analysis(&self) -> &AnalysisReport {
        &self.analysis
    }

    pub fn n_blocks(&self) -> usize {
        self.network.n_layers()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.network.block_dims()
    }

    fn check_blocks(&self, x: &BlockVector) -> Result<()> {
        if x.len() != self.n_blocks() {
            return Err(Error::DimensionMismatch {
                context: "number of blocks".into(),
                expected: self.n_blocks(),
                found: x.len(),
            });
        }
        for (i, (d, block)) in self.block_dims().iter().zip(x.blocks()).enumerate() {
            if *d != block.dim() {
                return Err(Error::Layer {
                    layer: i + 1,
                    message: format!("block has dimension {}, expected {d}", block.dim()),
                });
            }
        }
        Ok(())
    }

    /// `(W o S) x`: block `i` is `W_i x_{i-1}`, with `x_0 = x_n`.
    pub fn block_weight_apply(&self, x: &BlockVector) -> Result<BlockVector> {
        self.check_blocks(x)?;
        let shifted = shift_apply(x);
        let blocks = self
            .network
            .layers()
            .iter()
            .zip(shifted.blocks())
            .map(|(layer, xb)| layer.weights().apply(xb))
            .collect::<Result<Vec<_>>>()?;
        BlockVector::new(blocks)
    }

    /// `prox_psi(x)`: block `i` is `sigma_i(x_i + b_i)`.
    pub fn prox_psi_apply(&self, x: &BlockVector) -> Result<BlockVector> {
        self.check_blocks(x)?;
        let blocks = self
            .network
            .layers()
            .iter()
            .zip(x.blocks())
            .map(|(layer, xb)| layer.activation().prox(&xb.add(layer.bias())))
            .collect();
        BlockVector::new(blocks)
    }

    /// One application of `T = prox_psi o W o S`.
    pub fn fixed_point_map(&self, x: &BlockVector) -> Result<BlockVector> {
        self.prox_psi_apply(&self.block_weight_apply(x)?)
    }

    /// Iterates `T` until `theta / (1 - theta) * |T^n x - x| <= tol`.
    ///
    /// Single steps of `T` need not contract when only the product of the
    /// weight norms is below one; `T^n` always does, with factor `theta`,
    /// so convergence is measured once per full cycle of `n` steps.
    pub fn solve_block(&self, x0: Option<&BlockVector>, opts: &SolverOptions) -> Result<BlockSolveResult> {
        opts.validate()?;
        let a = &self.analysis;
        if !a.product_contractive {
            return Err(Error::NotContractive {
                factor: a.theta_n,
                norm_tol: a.norm_rel_tol,
            });
        }
        let factor = a.theta_n / (1.0 - a.theta_n);
        let mut x = match x0 {
            Some(x0) => {
                self.check_blocks(x0)?;
                x0.clone()
            }
            None => BlockVector::zeros(&self.block_dims()),
        };

        let n = self.n_blocks();
        let mut iterations = 0;
        let mut bound = f64::INFINITY;
        while iterations + n <= opts.max_iter {
            let anchor = x.clone();
            for _ in 0..n {
                x = self.fixed_point_map(&x)?;
            }
            iterations += n;
            let displacement = x.distance(&anchor);
            bound = factor * displacement;
            if bound <= opts.tol {
                return Ok(BlockSolveResult {
                    point: x,
                    iterations,
                    cycle_displacement: displacement,
                    certified_error: bound,
                });
            }
        }
        Err(Error::MaxIterExceeded {
            iterations,
            bound,
            last: x.flatten(),
        })
    }

    /// Checks `u_i = b_i - x_i + W_i x_{i-1} in d(phi_i)(x_i)` for every
    /// layer, and the equivalent prox form `x_i = sigma_i(W_i x_{i-1} + b_i)`.
    pub fn verify_inclusion(&self, x: &BlockVector, tol: f64) -> Result<InclusionReport> {
        let pre = self.block_weight_apply(x)?;
        let mut residuals = Vec::with_capacity(self.n_blocks());
        let mut prox_residuals = Vec::with_capacity(self.n_blocks());
        for ((layer, xi), wi) in self.network.layers().iter().zip(x.blocks()).zip(pre.blocks()) {
            let arg = wi.add(layer.bias());
            let u = arg.sub(xi);
            residuals.push(layer.activation().subgradient_distance(xi, &u, tol));
            prox_residuals.push(layer.activation().prox(&arg).distance(xi));
        }
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        let max_prox_residual = prox_residuals.iter().copied().fold(0.0, f64::max);
        Ok(InclusionReport {
            tol,
            satisfied: max_residual <= tol,
            prox_satisfied: max_prox_residual <= tol,
            per_layer_residuals: residuals,
            per_layer_prox_residuals: prox_residuals,
            max_residual,
            max_prox_residual,
        })
    }

    /// Compares `|x|` with `|b| / (1 - |W|)`; refuses unless `|W| < 1`.
    pub fn verify_bound(&self, x: &BlockVector, slack: f64) -> Result<BoundReport> {
        self.check_blocks(x)?;
        if !(slack >= 0.0) {
            return Err(Error::InvalidArgument(format!("slack must be >= 0, got {slack}")));
        }
        let a = &self.analysis;
        if !a.uniformly_contractive {
            return Err(Error::NotContractive {
                factor: a.w_max,
                norm_tol: a.norm_rel_tol,
            });
        }
        let bound = self.bias.norm() / (1.0 - a.w_max);
        let actual = x.norm();
        Ok(BoundReport {
            bound,
            actual,
            holds: actual <= bound + slack,
            margin: bound - actual,
            slack,
        })
    }

    /// Dense matrix of `W o S` on the flattened product space.
    pub fn assemble_weight_shift(&self, dim_cap: usize) -> Result<Matrix> {
        let dims = self.block_dims();
        let total: usize = dims.iter().sum();
        if total > dim_cap {
            return Err(Error::DimensionCap { dim: total, cap: dim_cap });
        }
        let offsets: Vec<usize> = dims
            .iter()
            .scan(0, |acc, d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        let n = dims.len();
        let mut m = Matrix::zeros(total, total);
        for (i, layer) in self.network.layers().iter().enumerate() {
            let src = (i + n - 1) % n;
            let w = layer.weights();
            for r in 0..w.rows() {
                for c in 0..w.cols() {
                    m.set(offsets[i] + r, offsets[src] + c, w.get(r, c));
                }
            }
        }
        Ok(m)
    }

    /// Minimum eigenvalue of the symmetric part of `I - W o S`.
    pub fn check_monotone(&self, dim_cap: usize) -> Result<MonotoneReport> {
        let ws = self.assemble_weight_shift(dim_cap)?;
        let n = ws.rows();
        let mut sym = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                sym.set(i, j, id - 0.5 * (ws.get(i, j) + ws.get(j, i)));
            }
        }
        let eig = symmetric_eigenvalues(&sym)?;
        let min_eig = eig[0];
        Ok(MonotoneReport {
            min_eig,
            monotone: min_eig >= -MONOTONE_TOL,
        })
    }

    /// `(|W o S|, max_i |W_i|)`: the assembled operator norm next to the
    /// per-layer maximum.
    pub fn block_operator_norm_identity(&self, norm: &NormOptions) -> Result<(f64, f64)> {
        let lhs = spectral_norm(&self.assemble_weight_shift(DEFAULT_DIM_CAP)?, norm)?;
        Ok((lhs, self.analysis.w_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSolveResult {
    pub point: BlockVector,
    /// Applications of `T`.
    pub iterations: usize,
    pub cycle_displacement: f64,
    pub certified_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub tol: f64,
    /// Distance from `u_i` to `d(phi_i)(x_i)`; infinite outside `dom(phi_i)`.
    pub per_layer_residuals: Vec<f64>,
    /// `|x_i - sigma_i(W_i x_{i-1} + b_i)|`.
    pub per_layer_prox_residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_prox_residual: f64,
    pub satisfied: bool,
    pub prox_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound: f64,
    pub actual: f64,
    pub holds: bool,
    pub margin: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub min_eig: f64,
    pub monotone: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{Activation, ActivationKind};
    use crate::linalg::Vector;
    use crate::network::Layer;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn bv(blocks: &[&[f64]]) -> BlockVector {
        BlockVector::new(blocks.iter().map(|b| v(b)).collect()).unwrap()
    }

    fn scalar_net(layers: &[(f64, f64, Activation)]) -> BlockNetwork {
        let layers = layers
            .iter()
            .map(|(w, b, a)| Layer::new(Matrix::from_rows(vec![vec![*w]]).unwrap(), v(&[*b]), *a).unwrap())
            .collect();
        BlockNetwork::new(Network::new(layers).unwrap(), &NormOptions::default()).unwrap()
    }

    fn two_layer() -> BlockNetwork {
        scalar_net(&[(2.0, 0.0, Activation::Identity), (0.4, 1.0, Activation::Identity)])
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_apply(&bv(&[&[1.0], &[2.0], &[3.0]])), bv(&[&[3.0], &[1.0], &[2.0]]));
        assert_eq!(shift_apply(&bv(&[&[5.0]])), bv(&[&[5.0]]));
        let x = bv(&[&[1.0], &[2.0, 3.0], &[4.0]]);
        let mut y = x.clone();
        for _ in 0..3 {
            y = shift_apply(&y);
        }
        assert_eq!(x, y);
    }

    #[test]
    fn block_weight_examples() {
        let bn = two_layer();
        assert_eq!(bn.block_weight_apply(&bv(&[&[1.0], &[5.0]])).unwrap(), bv(&[&[10.0], &[0.4]]));
        assert_eq!(bn.block_weight_apply(&bv(&[&[0.0], &[0.0]])).unwrap(), bv(&[&[0.0], &[0.0]]));
        let one = scalar_net(&[(0.5, 0.0, Activation::Identity)]);
        assert_eq!(one.block_weight_apply(&bv(&[&[4.0]])).unwrap(), bv(&[&[2.0]]));
        assert!(bn.block_weight_apply(&bv(&[&[1.0]])).is_err());
    }

    #[test]
    fn prox_psi_examples() {
        let bn = two_layer();
        assert_eq!(bn.prox_psi_apply(&bv(&[&[3.0], &[-2.0]])).unwrap(), bv(&[&[3.0], &[-1.0]]));
        let relu = scalar_net(&[(0.5, 1.0, Activation::Relu)]);
        assert_eq!(relu.prox_psi_apply(&bv(&[&[-2.0]])).unwrap(), bv(&[&[0.0]]));
    }

    #[test]
    fn solve_block_examples() {
        let bn = two_layer();
        let r = bn.solve_block(None, &SolverOptions::default()).unwrap();
        assert!(r.point.distance(&bv(&[&[10.0], &[5.0]])) < 1e-8);
        assert_eq!(r.iterations % 2, 0);

        let zero_bias = scalar_net(&[(0.9, 0.0, Activation::Relu), (-0.5, 0.0, Activation::Identity)]);
        let r = zero_bias
            .solve_block(Some(&bv(&[&[3.0], &[-7.0]])), &SolverOptions::default())
            .unwrap();
        assert!(r.point.norm() < 1e-10);
    }

    #[test]
    fn solve_block_refuses_non_contractive() {
        let bn = scalar_net(&[(2.0, 0.0, Activation::Identity), (0.5, 1.0, Activation::Identity)]);
        assert!(matches!(
            bn.solve_block(None, &SolverOptions::default()),
            Err(Error::NotContractive { .. })
        ));
    }

    #[test]
    fn inclusion_examples() {
        let bn = two_layer();
        let r = bn.verify_inclusion(&bv(&[&[10.0], &[5.0]]), 1e-12).unwrap();
        assert!(r.satisfied && r.prox_satisfied);
        assert!(r.max_residual <= 1e-12);

        let r = bn.verify_inclusion(&bv(&[&[0.0], &[0.0]]), 1e-8).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.per_layer_residuals, vec![0.0, 1.0]);

        // x = relu(0.5 x - 1) = 0 with u = -1 on the unbounded part of d(phi)(0).
        let relu = scalar_net(&[(0.5, -1.0, Activation::Relu)]);
        let r = relu.verify_inclusion(&bv(&[&[0.0]]), 0.0).unwrap();
        assert!(r.satisfied && r.prox_satisfied);
    }

    #[test]
    fn inclusion_outside_domain_is_infinite() {
        let relu = scalar_net(&[(0.5, -1.0, Activation::Relu)]);
        let r = relu.verify_inclusion(&bv(&[&[-1.0]]), 1e-8).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.max_residual, f64::INFINITY);
    }

    #[test]
    fn bound_examples() {
        let soft = Activation::new(ActivationKind::SoftThreshold, Some(0.5)).unwrap();
        let bn = scalar_net(&[(0.5, 2.0, soft)]);
        let p = bn.solve_block(None, &SolverOptions::default()).unwrap().point;
        assert!((p.block(0)[0] - 3.0).abs() < 1e-9);
        let r = bn.verify_bound(&bv(&[&[3.0]]), 0.0).unwrap();
        assert_eq!((r.bound, r.actual, r.margin), (4.0, 3.0, 1.0));
        assert!(r.holds);

        let zero = scalar_net(&[(0.5, 0.0, Activation::Identity)]);
        let r = zero.verify_bound(&bv(&[&[0.0]]), 0.0).unwrap();
        assert_eq!((r.bound, r.actual), (0.0, 0.0));
        assert!(r.holds);

        assert!(two_layer().verify_bound(&bv(&[&[10.0], &[5.0]]), 0.0).is_err());
    }

    #[test]
    fn monotone_examples() {
        let zero = scalar_net(&[(0.0, 1.0, Activation::Identity), (0.0, 0.0, Activation::Identity)]);
        let r = zero.check_monotone(DEFAULT_DIM_CAP).unwrap();
        assert!((r.min_eig - 1.0).abs() < 1e-15 && r.monotone);

        let r = scalar_net(&[(2.0, 0.0, Activation::Identity)]).check_monotone(DEFAULT_DIM_CAP).unwrap();
        assert_eq!(r.min_eig, -1.0);
        assert!(!r.monotone);

        let r = scalar_net(&[(0.5, 0.0, Activation::Identity)]).check_monotone(DEFAULT_DIM_CAP).unwrap();
        assert_eq!(r.min_eig, 0.5);
        assert!(r.monotone);

        assert!(matches!(
            two_layer().check_monotone(1),
            Err(Error::DimensionCap { dim: 2, cap: 1 })
        ));
    }

    #[test]
    fn operator_norm_identity_examples() {
        let (lhs, rhs) = two_layer().block_operator_norm_identity(&NormOptions::default()).unwrap();
        assert!((lhs - 2.0).abs() < 1e-9 && rhs == 2.0);
        let ids = scalar_net(&[(1.0, 0.0, Activation::Identity), (1.0, 0.0, Activation::Identity)]);
        let (lhs, rhs) = ids.block_operator_norm_identity(&NormOptions::default()).unwrap();
        assert!((lhs - 1.0).abs() < 1e-12 && rhs == 1.0);
    }

    #[test]
    fn non_recurrent_network_is_rejected() {
        let l = Layer::new(Matrix::zeros(2, 1), Vector::zeros(2), Activation::Identity).unwrap();
        let net = Network::new(vec![l]).unwrap();
        assert!(matches!(
            BlockNetwork::new(net, &NormOptions::default()),
            Err(Error::NotRecurrent { .. })
        ));
    }
}
