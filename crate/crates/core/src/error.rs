use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be even and positive")]
    OddGrid(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("grid mismatch: expected {expected} entries, got {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("stencil support radius {radius} does not fit a box of side {n}")]
    StencilTooLarge { radius: usize, n: usize },
    #[error("stencil is not symmetric at offset {0:?}")]
    AsymmetricStencil([i32; 3]),
    #[error("lambda(k) = {value} < 0 at k = {k:?}: stencil is not stable")]
    Unstable { k: [f64; 3], value: f64 },
    #[error("Re psi_hat_plus(0) = {0} is not representable by real fields in the zero-mean gauge")]
    NonRealZeroMode(f64),
    #[error("omega vanishes at k = {0:?} != 0; mode inversion undefined")]
    DegenerateOmega([f64; 3]),
    #[error("group velocity is undefined at k = 0")]
    SingularAtOrigin,
    #[error("leapfrog blow-up after {0} steps")]
    BlowUp(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("test function is not admissible: {0}")]
    NotAdmissible(String),
    #[error("p_max = {p_max} exceeds N/2 = {half}")]
    PMaxTooLarge { p_max: usize, half: usize },
    #[error("N = {0} too large for the exact oracle (limit 24)")]
    OracleTooLarge(usize),
    #[error("label is not a unit vector (|q| = {0})")]
    NonUnitLabel(f64),
    #[error("time horizon violated: t = {t} needs N >= {needed}, got {n}")]
    Horizon { t: f64, needed: usize, n: usize },
    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
    #[error("family has no known limit: {0}")]
    NoKnownLimit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
