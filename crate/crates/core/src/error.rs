use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("synthesized kernel field has imaginary residue {residue:e} (limit 1e-10)")]
    ImagResidue { residue: f64 },

    #[error("kernel DFT coefficient at ({m1},{m2}) is negative: {value:e}")]
    NegativeCoeff { m1: usize, m2: usize, value: f64 },

    #[error("time {t} outside bracket [{t0}, {t1}]")]
    TimeOutOfBracket { t: f64, t0: f64, t1: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("CFL condition violated: {0}")]
    CflViolation(String),

    #[error("fixed-point iteration diverged at step {step} after {iters} iterations (residual {residual:e})")]
    FixedPointDiverged { step: usize, iters: usize, residual: f64 },

    #[error("gradient positivity lost at step {step}: min(theta + L) = {min:e}")]
    PositivityLost { step: usize, min: f64 },

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("bound '{bound}' violated at step {step}")]
    BoundViolated { bound: &'static str, step: usize },

    #[error("entropy argument {value:e} is below the admissible slack")]
    NegativeArgument { value: f64 },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("sink failure: {0}")]
    Sink(String),

    #[error("malformed {what} in {path}: {msg}")]
    Format { what: &'static str, path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
