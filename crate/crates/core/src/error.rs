use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported {what} degree {degree} (supported: {min}..={max})")]
    UnsupportedDegree {
        what: &'static str,
        degree: usize,
        min: usize,
        max: usize,
    },

    #[error("{path}:{line}: {message}")]
    MeshParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("non-conforming mesh: triangle {vertices:?} is shared by {count} elements")]
    Conformity { vertices: [usize; 3], count: usize },

    #[error("element {element} has a degenerate affine map (det = {det:e})")]
    Orientation { element: usize, det: f64 },

    #[error("boundary triangle {vertices:?} has no PEC/ABC tag")]
    UntaggedBoundary { vertices: [usize; 3] },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value produced at step {step} (t = {time:e} s)")]
    NonFinite { step: usize, time: f64 },

    #[error("local saddle-point factorization failed on element {element}")]
    Factorization { element: usize },

    #[error("zero reference norm at probe {probe}")]
    ZeroDenominator { probe: usize },

    #[error("time grids are misaligned at primary step {step} (t = {time:e} s)")]
    TimeGridMisalignment { step: usize, time: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
