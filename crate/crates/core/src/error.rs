use thiserror::Error;

use crate::surface::SurfaceTag;

/// Every failure the engine can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("surface tag mismatch: {0:?} vs {1:?}")]
    TagMismatch(SurfaceTag, SurfaceTag),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("transport problem needs {entries} cost entries, above the configured cap of {cap}")]
    SizeCap { entries: usize, cap: usize },

    #[error("point ({theta}, {y}) lies on a seam of a box shuffle")]
    SeamHit { theta: f64, y: f64 },

    #[error("entropic solver did not converge: marginal violation {violation:e}")]
    NonConvergence { violation: f64 },

    #[error("infeasible transport plan: {0}")]
    InfeasiblePlan(String),

    #[error("shuffle needs N = {needed} oscillations, above the cap of {cap}")]
    OscillationCap { needed: u128, cap: u64 },

    #[error("rotation denominator {q} exceeds the orbit cap")]
    OrbitCap { q: String },

    #[error("stage {stage} rejected: condition `{condition}` failed ({detail})")]
    StepRejected {
        stage: usize,
        condition: String,
        detail: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
