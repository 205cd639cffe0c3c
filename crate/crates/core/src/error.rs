use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model parameters must be finite")]
    NonFinite,
    #[error("linear coupling alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("sweep rate v must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("sweep window is empty: gamma_start={start} >= gamma_end={end}")]
    EmptyWindow { start: f64, end: f64 },
    #[error("state is not normalized: |a|^2 + |b|^2 = {0}")]
    NotNormalized(f64),
    #[error("population difference {0} outside [-1, 1]")]
    PopulationOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    /// No root of the level quartic survived validation.
    #[error("no validated adiabatic level at alpha={alpha}, beta={beta}, gamma={gamma}")]
    NoLevels { alpha: f64, beta: f64, gamma: f64 },
    #[error("no knot point for beta={beta} (requires beta < -alpha, alpha={alpha})")]
    NoKnot { alpha: f64, beta: f64 },
    #[error("knot slope did not stabilize for beta={0}")]
    SlopeUnstable(f64),
    #[error("gamma grid must be sorted ascending")]
    UnsortedGrid,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("norm drift {drift:.3e} exceeds 1e-9 after tolerance retry")]
    ToleranceExceeded { drift: f64 },
    #[error("state left the unit sphere at gamma={gamma} (|psi|^2 = {norm_sqr})")]
    NonFiniteState { gamma: f64, norm_sqr: f64 },
    #[error("step size underflow at t={t}")]
    StepUnderflow { t: f64 },
    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),
    #[error("beta={beta} outside the hole regime (requires beta <= -alpha, alpha={alpha})")]
    OutOfRegime { alpha: f64, beta: f64 },
    #[error("invalid integrator configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseSpaceError {
    #[error("canonical equations are singular at the pole s={0}")]
    PoleSingularity(f64),
    #[error("classical Hamiltonian log term is singular at s={0} (hole line)")]
    LogSingularity(f64),
    #[error("classical Hamiltonian requires beta != 0; use the linear form")]
    BetaZero,
    #[error("beta={0} outside the regime of this boundary")]
    OutOfRegime(f64),
    #[error("no four-level window at beta={0}: tangency roots have merged or are absent")]
    NoWindow(f64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("invalid experiment configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
}

impl ExperimentError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.into(),
            source,
        }
    }
}
