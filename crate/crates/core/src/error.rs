use crate::C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix that has to be inverted is singular to working precision.
    #[error("singular matrix {what} (reciprocal condition {rcond:.3e})")]
    Singular { what: String, rcond: f64 },

    /// `A X − X B = R` is ill-posed because A and B share an eigenvalue.
    #[error("Sylvester spectra overlap: {a} (left) vs {b} (right), gap {gap:.3e}")]
    SpectraOverlap { a: C64, b: C64, gap: f64 },

    #[error("invalid eigenvalue selection: {0}")]
    Selection(String),

    /// Γ gives a singular Z, so no gains exist for it.
    #[error("inadmissible parameter: Z has reciprocal condition {rcond:.3e}")]
    InadmissibleGamma { rcond: f64 },

    #[error("no admissible initial parameter found in {attempts} draws")]
    NoAdmissibleStart { attempts: usize },

    #[error("unknown builtin example '{0}'")]
    UnknownExample(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by singular or ill-posed numerics rather than
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::SpectraOverlap { .. }
                | Error::InadmissibleGamma { .. }
                | Error::NoAdmissibleStart { .. }
                | Error::Divergence { .. }
                | Error::Eigen(_)
        )
    }
}
