use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset `{name}`; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("malformed configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad override: {0}")]
    Override(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} diverged at t = {time}")]
    Divergence { stage: &'static str, time: f64 },
    #[error("trajectory too short: {have} samples spanning {span}, need more than {need}")]
    TrajectoryTooShort { have: usize, span: f64, need: f64 },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },
    #[error("quadrature covariance is not symmetric (max deviation {deviation:e})")]
    NonSymmetric { deviation: f64 },
    #[error("unphysical covariance: smallest symplectic eigenvalue {nu_minus}")]
    Unphysical { nu_minus: f64 },
    #[error("phase-difference variance {0} is not positive")]
    NonPositiveVariance(f64),
    #[error("averaging window [{start}, {end}] not covered by series ending at {available}")]
    WindowNotCovered {
        start: f64,
        end: f64,
        available: f64,
    },
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
