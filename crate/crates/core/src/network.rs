//! Layers `g_i(x) = sigma_i(W_i x + b_i)`, their recurrent composition
//! `g = g_n o ... o g_1`, and the Banach iteration `x_{k+1} = g(x_k)`.
//!
//! Each activation is nonexpansive, so `g` is Lipschitz with constant
//! `theta = prod_i |W_i|`. When `theta < 1` the iteration contracts to the
//! unique fixed point from any start, and after a step of length `delta`
//! the distance to that point is at most `theta / (1 - theta) * delta`. The
//! solver stops on that a-posteriori bound.

use serde::Serialize;

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{spectral_norm, BlockVector, Matrix, NormOptions, Vector};

/// `theta` values at or above `1 - CONTRACTION_MARGIN` are treated as
/// non-contractive.
pub const CONTRACTION_MARGIN: f64 = 1e-12;

/// One layer `x -> sigma(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Matrix,
    bias: Vector,
    activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.dim() {
            return Err(Error::InvalidArgument(format!(
                "weights have {} rows but bias has dimension {}",
                weights.rows(),
                bias.dim()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    /// `sigma(W x + b)`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let pre = self.weights.apply(x)?.add(&self.bias);
        Ok(self.activation.prox(&pre))
    }
}

/// A feed-forward stack of layers `g_n o ... o g_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].input_dim() != pair[0].output_dim() {
                return Err(Error::Layer {
                    layer: i + 2,
                    message: format!(
                        "weights have {} columns but layer {} outputs dimension {}",
                        pair[1].input_dim(),
                        i + 1,
                        pair[0].output_dim()
                    ),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Space dimensions `(d_0, d_1, ..., d_n)`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::output_dim))
            .collect()
    }

    /// Dimensions of the product space blocks `(d_1, ..., d_n)`.
    pub fn block_dims(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::output_dim).collect()
    }

    /// Input and output spaces coincide, so `g` maps a space to itself.
    pub fn is_recurrent(&self) -> bool {
        self.input_dim() == self.output_dim()
    }

    pub(crate) fn require_recurrent(&self) -> Result<()> {
        if self.is_recurrent() {
            Ok(())
        } else {
            Err(Error::NotRecurrent {
                input: self.input_dim(),
                output: self.output_dim(),
            })
        }
    }

    /// The biases `(b_1, ..., b_n)` as a point of the product space.
    pub fn bias_block(&self) -> BlockVector {
        BlockVector::new(self.layers.iter().map(|l| l.bias.clone()).collect())
            .expect("network has at least one layer")
    }

    /// Applies layer `index` (1-based) to `x`.
    pub fn layer_apply(&self, index: usize, x: &Vector) -> Result<Vector> {
        let layer = &self.layers[index - 1];
        if x.dim() != layer.input_dim() {
            return Err(Error::LayerDimension {
                layer: index,
                expected: layer.input_dim(),
                found: x.dim(),
            });
        }
        layer.apply(x)
    }

    /// `g(x0)` together with every intermediate layer output.
    pub fn forward(&self, x0: &Vector) -> Result<(Vector, Vec<Vector>)> {
        let mut trajectory = Vec::with_capacity(self.layers.len());
        let mut x = x0.clone();
        for i in 1..=self.layers.len() {
            x = self.layer_apply(i, &x)?;
            trajectory.push(x.clone());
        }
        Ok((x, trajectory))
    }

    /// `g(x)` without recording the trajectory.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let mut x = x.clone();
        for i in 1..=self.layers.len() {
            x = self.layer_apply(i, &x)?;
        }
        Ok(x)
    }

    /// Weight norms and the two contraction conditions.
    pub fn analyze(&self, opts: &NormOptions) -> Result<AnalysisReport> {
        let per_layer_norms = self
            .layers
            .iter()
            .map(|l| spectral_norm(&l.weights, opts))
            .collect::<Result<Vec<_>>>()?;
        let theta_n = per_layer_norms.iter().product();
        let w_max = per_layer_norms.iter().copied().fold(0.0, f64::max);
        Ok(AnalysisReport {
            theta_n,
            w_max,
            product_contractive: theta_n < 1.0 - CONTRACTION_MARGIN,
            uniformly_contractive: w_max < 1.0 - CONTRACTION_MARGIN,
            bias_norm: self.bias_block().norm(),
            norm_rel_tol: opts.rel_tol,
            per_layer_norms,
        })
    }

    /// Banach iteration of `g` from `x0` (the origin when `None`).
    pub fn solve_sequential(&self, x0: Option<&Vector>, opts: &SolverOptions) -> Result<FixedPointResult> {
        let analysis = self.analyze(&opts.norm)?;
        self.solve_sequential_with(&analysis, x0, opts)
    }

    /// Same as [`Network::solve_sequential`] with a precomputed analysis.
    pub fn solve_sequential_with(
        &self,
        analysis: &AnalysisReport,
        x0: Option<&Vector>,
        opts: &SolverOptions,
    ) -> Result<FixedPointResult> {
        self.iterate(analysis, x0, opts, |_, _, _| {})
    }

    /// Runs the Banach iteration recording `(k, |x_{k+1} - x_k|, x_k)` per step.
    pub fn trace_sequential(&self, x0: Option<&Vector>, opts: &SolverOptions) -> Result<Trace> {
        let analysis = self.analyze(&opts.norm)?;
        let mut rows = Vec::new();
        let result = self.iterate(&analysis, x0, opts, |k, step, x| {
            rows.push(TraceRow {
                k,
                step_norm: step,
                x: x.clone(),
            })
        })?;
        Ok(Trace {
            rows,
            theta_n: analysis.theta_n,
            result,
        })
    }

    /// Solves from each start independently; results are in start order.
    pub fn solve_multistart(
        &self,
        starts: &[Vector],
        opts: &SolverOptions,
        exec: Execution,
    ) -> Result<Vec<Result<FixedPointResult>>> {
        let analysis = self.analyze(&opts.norm)?;
        Ok(exec.map(starts, |_, x0| self.solve_sequential_with(&analysis, Some(x0), opts)))
    }

    fn iterate(
        &self,
        analysis: &AnalysisReport,
        x0: Option<&Vector>,
        opts: &SolverOptions,
        mut on_step: impl FnMut(usize, f64, &Vector),
    ) -> Result<FixedPointResult> {
        self.require_recurrent()?;
        opts.validate()?;
        if !analysis.product_contractive {
            return Err(Error::NotContractive {
                factor: analysis.theta_n,
                norm_tol: analysis.norm_rel_tol,
            });
        }
        let theta = analysis.theta_n;
        let factor = theta / (1.0 - theta);

        let mut x = match x0 {
            Some(x0) => {
                if x0.dim() != self.input_dim() {
                    return Err(Error::LayerDimension {
                        layer: 1,
                        expected: self.input_dim(),
                        found: x0.dim(),
                    });
                }
                x0.clone()
            }
            None => Vector::zeros(self.input_dim()),
        };

        let mut first_step = None;
        let mut bound = f64::INFINITY;
        for k in 0..opts.max_iter {
            let next = self.apply(&x)?;
            let step = next.distance(&x);
            on_step(k, step, &x);
            first_step.get_or_insert(step);
            bound = factor * step;
            if bound <= opts.tol {
                return Ok(FixedPointResult {
                    point: next,
                    iterations: k + 1,
                    last_step_norm: step,
                    certified_error: bound,
                    converged: true,
                    theta_n: theta,
                    a_priori_iterations: a_priori_iterations(theta, first_step.unwrap(), opts.tol),
                });
            }
            x = next;
        }
        Err(Error::MaxIterExceeded {
            iterations: opts.max_iter,
            bound,
            last: x,
        })
    }

    /// The product-space point `(g_1(x), g_2(g_1(x)), ..., g(x))`.
    ///
    /// For a fixed point `x` this is the unique layer trajectory; its last
    /// block reproduces `x`.
    pub fn lift_trajectory(&self, xn_star: &Vector) -> Result<BlockVector> {
        self.require_recurrent()?;
        let (_, trajectory) = self.forward(xn_star)?;
        BlockVector::new(trajectory)
    }
}

/// `k >= log(tol (1 - theta) / |x_1 - x_0|) / log(theta)`, the iteration count
/// guaranteed by the a-priori Banach estimate. Diagnostic only.
pub fn a_priori_iterations(theta: f64, first_step: f64, tol: f64) -> f64 {
    if first_step == 0.0 || theta == 0.0 {
        return 1.0;
    }
    let k = (tol * (1.0 - theta) / first_step).ln() / theta.ln();
    k.max(1.0).ceil()
}

/// Iteration settings shared by the fixed-point solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub norm: NormOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            norm: NormOptions::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    /// `|W_i|` per layer.
    pub per_layer_norms: Vec<f64>,
    /// `prod_i |W_i|`, the Lipschitz constant of `g`.
    pub theta_n: f64,
    /// `max_i |W_i| = |W|`.
    pub w_max: f64,
    pub product_contractive: bool,
    pub uniformly_contractive: bool,
    /// `|b|` on the product space.
    pub bias_norm: f64,
    /// Relative tolerance the norms were computed to.
    pub norm_rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub point: Vector,
    pub iterations: usize,
    pub last_step_norm: f64,
    /// `theta / (1 - theta) * last_step_norm`, a bound on the distance to the fixed point.
    pub certified_error: f64,
    pub converged: bool,
    pub theta_n: f64,
    pub a_priori_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub step_norm: f64,
    pub x: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub theta_n: f64,
    pub result: FixedPointResult,
}

impl Trace {
    /// Successive ratios `step_{k+1} / step_k` over steps above `floor`.
    pub fn step_ratios(&self, floor: f64) -> Vec<f64> {
        self.rows
            .windows(2)
            .filter(|w| w[0].step_norm > floor && w[1].step_norm > floor)
            .map(|w| w[1].step_norm / w[0].step_norm)
            .collect()
    }

    /// Least-squares fit of `log(step_k)` against `k`, returned as a ratio.
    pub fn fitted_ratio(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.step_norm > 0.0)
            .map(|r| (r.k as f64, r.step_norm.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    }
}
