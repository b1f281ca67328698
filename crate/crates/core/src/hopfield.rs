//! Continuous-time Hopfield dynamics `x' = -D x + W sigma(x) + b`.
//!
//! `D = diag(d_1 I, ..., d_n I)` with `d_i > 0` acts per block and `sigma`
//! applies one proximal activation per block. An equilibrium satisfies
//! `x = D^{-1}(W sigma(x) + b)`; with `z = sigma(x)` this becomes the prox
//! fixed-point equation `z = sigma(D^{-1}(W z + b))`, i.e. the inclusion
//! `D^{-1} b in z - D^{-1} W z + d(phi)(z)`. The map is a contraction with
//! factor `|D^{-1} W|` when that norm is below one.

use serde::Serialize;

use crate::activations::Activation;
use crate::error::{check_dim, Error, Result};
use crate::exec::Execution;
use crate::linalg::{spectral_norm, Matrix, NormOptions, Vector};
use crate::network::{SolverOptions, CONTRACTION_MARGIN};

#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldModel {
    self_inhibition: Vec<f64>,
    block_dims: Vec<usize>,
    weights: Matrix,
    bias: Vector,
    activations: Vec<Activation>,
}

impl HopfieldModel {
    pub fn new(
        self_inhibition: Vec<f64>,
        block_dims: Vec<usize>,
        weights: Matrix,
        bias: Vector,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::InvalidArgument("block dimensions must be positive and non-empty".into()));
        }
        let n = block_dims.len();
        check_dim("self-inhibition entries vs blocks", n, self_inhibition.len())?;
        check_dim("activations vs blocks", n, activations.len())?;
        if let Some(d) = self_inhibition.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "self-inhibition must be positive and finite, got {d}"
            )));
        }
        let total: usize = block_dims.iter().sum();
        check_dim("weight rows vs state dimension", total, weights.rows())?;
        check_dim("weight columns vs state dimension", total, weights.cols())?;
        check_dim("bias vs state dimension", total, bias.dim())?;
        Ok(Self {
            self_inhibition,
            block_dims,
            weights,
            bias,
            activations,
        })
    }

    pub fn dim(&self) -> usize {
        self.bias.dim()
    }

    pub fn self_inhibition(&self) -> &[f64] {
        &self.self_inhibition
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    /// `d_i` expanded to one entry per coordinate.
    fn coordinate_inhibition(&self) -> Vec<f64> {
        self.block_dims
            .iter()
            .zip(&self.self_inhibition)
            .flat_map(|(dim, d)| std::iter::repeat_n(*d, *dim))
            .collect()
    }

    /// `sigma(x)` applied block by block.
    pub fn sigma(&self, x: &Vector) -> Result<Vector> {
        check_dim("state dimension", self.dim(), x.dim())?;
        let mut out = Vec::with_capacity(x.dim());
        let mut offset = 0;
        for (dim, act) in self.block_dims.iter().zip(&self.activations) {
            out.extend(act.prox_slice(&x.as_slice()[offset..offset + dim]));
            offset += dim;
        }
        Ok(Vector::from_vec(out))
    }

    /// `D^{-1} W`, the rows of `W` divided by their block's `d_i`.
    pub fn scaled_weights(&self) -> Matrix {
        let inv: Vec<f64> = self.coordinate_inhibition().iter().map(|d| 1.0 / d).collect();
        self.weights.scale_rows(&inv).expect("row count checked at construction")
    }

    /// `|D^{-1} W|`.
    pub fn contraction_factor(&self, norm: &NormOptions) -> Result<f64> {
        spectral_norm(&self.scaled_weights(), norm)
    }

    /// `D^{-1}(W z + b)`.
    pub fn state_from_activation(&self, z: &Vector) -> Result<Vector> {
        let wz = self.weights.apply(z)?.add(&self.bias);
        let d = self.coordinate_inhibition();
        Ok(Vector::from_vec(
            wz.as_slice().iter().zip(&d).map(|(v, d)| v / d).collect(),
        ))
    }

    /// `-D x + W sigma(x) + b`.
    pub fn vector_field(&self, x: &Vector) -> Result<Vector> {
        let wsx = self.weights.apply(&self.sigma(x)?)?;
        let d = self.coordinate_inhibition();
        Ok(Vector::from_vec(
            x.as_slice()
                .iter()
                .zip(&d)
                .zip(wsx.as_slice().iter().zip(self.bias.as_slice()))
                .map(|((xi, di), (wi, bi))| -di * xi + wi + bi)
                .collect(),
        ))
    }

    /// `|-D x + W sigma(x) + b|`.
    pub fn dynamics_residual(&self, x: &Vector) -> Result<f64> {
        Ok(self.vector_field(x)?.norm())
    }

    /// Per-block distance of `D^{-1} b - z + D^{-1} W z` to `d(phi_i)(z_i)`.
    pub fn inclusion_residuals(&self, z: &Vector, tol: f64) -> Result<Vec<f64>> {
        let u = self.state_from_activation(z)?.sub(z);
        let mut out = Vec::with_capacity(self.block_dims.len());
        let mut offset = 0;
        for (dim, act) in self.block_dims.iter().zip(&self.activations) {
            let zi = Vector::from_vec(z.as_slice()[offset..offset + dim].to_vec());
            let ui = Vector::from_vec(u.as_slice()[offset..offset + dim].to_vec());
            out.push(act.subgradient_distance(&zi, &ui, tol));
            offset += dim;
        }
        Ok(out)
    }

    /// Banach iteration `z <- sigma(D^{-1}(W z + b))` from `z0` (origin when `None`).
    pub fn equilibrium_via_prox(&self, z0: Option<&Vector>, opts: &SolverOptions) -> Result<EquilibriumResult> {
        let kappa = self.contraction_factor(&opts.norm)?;
        self.equilibrium_with(kappa, z0, opts)
    }

    /// Runs [`HopfieldModel::equilibrium_via_prox`] from every start.
    pub fn equilibrium_multistart(
        &self,
        starts: &[Vector],
        opts: &SolverOptions,
        exec: Execution,
    ) -> Result<Vec<Result<EquilibriumResult>>> {
        let kappa = self.contraction_factor(&opts.norm)?;
        Ok(exec.map(starts, |_, z0| self.equilibrium_with(kappa, Some(z0), opts)))
    }

    fn equilibrium_with(&self, kappa: f64, z0: Option<&Vector>, opts: &SolverOptions) -> Result<EquilibriumResult> {
        opts.validate()?;
        if kappa >= 1.0 - CONTRACTION_MARGIN {
            return Err(Error::NotContractive {
                factor: kappa,
                norm_tol: opts.norm.rel_tol,
            });
        }
        let factor = kappa / (1.0 - kappa);
        let mut z = match z0 {
            Some(z0) => {
                check_dim("starting point", self.dim(), z0.dim())?;
                z0.clone()
            }
            None => Vector::zeros(self.dim()),
        };
        let mut bound = f64::INFINITY;
        for k in 0..opts.max_iter {
            let next = self.sigma(&self.state_from_activation(&z)?)?;
            let step = next.distance(&z);
            bound = factor * step;
            z = next;
            if bound <= opts.tol {
                let x_star = self.state_from_activation(&z)?;
                let residual = self.dynamics_residual(&x_star)?;
                return Ok(EquilibriumResult {
                    x_star,
                    z_star: z,
                    residual,
                    contraction_factor: kappa,
                    iterations: k + 1,
                    certified_error: bound,
                });
            }
        }
        Err(Error::MaxIterExceeded {
            iterations: opts.max_iter,
            bound,
            last: z,
        })
    }

    /// Classical fixed-step RK4 from `x0` up to `t_end`, recording every step.
    pub fn simulate(&self, x0: &Vector, dt: f64, t_end: f64) -> Result<Trajectory> {
        check_dim("initial state", self.dim(), x0.dim())?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(t_end >= dt) || !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("t_end must be >= dt, got {t_end}")));
        }
        let steps = (t_end / dt - 1e-9).ceil() as usize;
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        let mut x = x0.clone();
        times.push(0.0);
        states.push(x.clone());
        for k in 1..=steps {
            let k1 = self.vector_field(&x)?;
            let k2 = self.vector_field(&x.add(&k1.scale(0.5 * dt)))?;
            let k3 = self.vector_field(&x.add(&k2.scale(0.5 * dt)))?;
            let k4 = self.vector_field(&x.add(&k3.scale(dt)))?;
            let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
            x = x.add(&incr.scale(dt / 6.0));
            let t = k as f64 * dt;
            if !x.is_finite() {
                return Err(Error::BlowUp { time: t });
            }
            times.push(t);
            states.push(x.clone());
        }
        Ok(Trajectory { times, states })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub x_star: Vector,
    /// `sigma(x_star)`, the fixed point of the prox iteration.
    pub z_star: Vector,
    /// `|-D x* + W sigma(x*) + b|`.
    pub residual: f64,
    /// `|D^{-1} W|`.
    pub contraction_factor: f64,
    pub iterations: usize,
    pub certified_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
}

impl Trajectory {
    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }
}
