use thiserror::Error;

use crate::linalg::Vector;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("layer {layer}: expected input dimension {expected}, found {found}")]
    LayerDimension {
        layer: usize,
        expected: usize,
        found: usize,
    },

    #[error("layer {layer}: {message}")]
    Layer { layer: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral norm did not converge after {iterations} iterations (last estimate {estimate})")]
    SpectralNotConverged { iterations: usize, estimate: f64 },

    #[error("symmetric eigensolver did not converge after {sweeps} sweeps")]
    EigenNotConverged { sweeps: usize },

    #[error("network is not recurrent: input dimension {input} differs from output dimension {output}")]
    NotRecurrent { input: usize, output: usize },

    #[error("contraction factor {factor} is not below 1 (norm tolerance {norm_tol:e}); a unique fixed point is not guaranteed")]
    NotContractive { factor: f64, norm_tol: f64 },

    #[error("no convergence after {iterations} iterations (error bound {bound:e})")]
    MaxIterExceeded {
        iterations: usize,
        bound: f64,
        last: Vector,
    },

    #[error("assembled operator dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("state became non-finite at t = {time}")]
    BlowUp { time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: impl Into<String>, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        })
    }
}
