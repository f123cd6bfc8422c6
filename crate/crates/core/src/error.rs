use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian: |H - H^dag|_max = {defect:e} exceeds {tolerance:e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("Hamiltonian is not Hermitian at t = {t}: |H - H^dag|_max = {defect:e}")]
    NonHermitianAt { t: f64, defect: f64 },

    #[error("state is not normalized: |psi| = {norm}")]
    NotNormalized { norm: f64 },

    #[error("frame index {index} out of range (count {count})")]
    FrameIndex { index: usize, count: usize },

    #[error("normalization drift at t = {t}: Im<v|i dv/dt> = {imag:e} exceeds {tolerance:e}")]
    NormalizationDrift { t: f64, imag: f64, tolerance: f64 },

    #[error(
        "orthogonal endpoints: Pancharatnam phase undefined (|overlap| = {overlap:e} <= {floor:e})"
    )]
    OrthogonalEndpoints { overlap: f64, floor: f64 },

    #[error("not cyclic at tolerance {tol:e} (||overlap| - 1| = {deviation:e})")]
    NotCyclic { deviation: f64, tol: f64 },

    #[error("geometric phase routes disagree: connection integral {connection} vs total + dynamical {decomposition}")]
    RouteDisagreement { connection: f64, decomposition: f64 },

    #[error("frame is aperiodic; a closed loop is required")]
    Aperiodic,

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Usage and configuration problems, as opposed to numerical failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidGrid(_)
        )
    }
}
