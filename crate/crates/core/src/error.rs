use thiserror::Error;

use crate::solver::Trajectory;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("grid of {grid} points is too small for {modes} modes (need at least {required})")]
    InsufficientGrid {
        grid: usize,
        modes: usize,
        required: usize,
    },

    #[error("aliasing: grid of {grid} points cannot resolve a degree-{degree} nonlinearity of {modes} modes (need at least {required})")]
    Aliasing {
        grid: usize,
        modes: usize,
        degree: usize,
        required: usize,
    },

    #[error("polynomial degree {degree} exceeds the cap of {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("negative time: {0}")]
    NegativeTime(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{coarse} steps do not divide the base resolution of {base} steps")]
    Divisibility { coarse: usize, base: usize },

    #[error("parameter window violated: {0}")]
    Window(String),

    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("C^δ norm {norm} exceeds the radius {radius}")]
    NormExceedsRadius { norm: f64, radius: f64 },

    #[error("blow-up at step {step}: L2 norm {norm:e} exceeds the threshold")]
    Blowup {
        step: usize,
        norm: f64,
        partial: Box<Trajectory>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
