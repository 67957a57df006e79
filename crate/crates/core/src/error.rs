use thiserror::Error;

/// Errors produced by the scattering engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid physics parameters: {0}")]
    InvalidParams(String),

    #[error("invalid wave packet: {0}")]
    InvalidPacket(String),

    #[error("potential queried at delta position x = {x}; a delta spike has no pointwise value")]
    DeltaQuery { x: f64 },

    #[error("degenerate matching system at p = {p}: {reason}")]
    Degenerate { p: String, reason: &'static str },

    #[error("pole of the closed-form amplitude at p = {p}")]
    Pole { p: String },

    #[error("bound-state scan too coarse: {coarse} roots at base resolution, {fine} at doubled resolution")]
    ScanTooCoarse { coarse: usize, fine: usize },

    #[error("spurious root at gamma = {gamma}: proportionality constant has relative imaginary part {rel_imag:.3e}")]
    SpuriousRoot { gamma: f64, rel_imag: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("momentum {p} is not a basis element here: {reason}")]
    NotBasisElement { p: f64, reason: &'static str },

    #[error("norm drift {drift:.3e} at step {step} exceeds the per-step limit")]
    NormDrift { step: usize, drift: f64 },

    #[error("scenario error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether this error stems from invalid user input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidPotential(_)
                | Error::InvalidParams(_)
                | Error::InvalidPacket(_)
                | Error::Precondition(_)
                | Error::Schema { .. }
                | Error::Json(_)
                | Error::NotBasisElement { .. }
                | Error::DeltaQuery { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
