use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input failed a structural or value check.
    #[error("validation error: {0}")]
    Validation(String),

    /// A CSV cell or header could not be interpreted. `row` is 1-based and counts data rows only.
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("singular design: collinear columns {columns:?}")]
    SingularDesign { columns: Vec<String> },

    #[error("degenerate sample: every unit has t = {0}")]
    DegenerateArm(u8),

    #[error("perfect separation in logistic fit (|coefficient| = {magnitude:.3e} exceeds 30)")]
    Separation { magnitude: f64 },

    #[error("{what} did not converge after {iterations} iterations: {trace}")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        trace: String,
    },

    #[error("quadrature failed on [{lo}, {hi}]: {message}")]
    Quadrature { lo: f64, hi: f64, message: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than by the estimation itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Parse { .. }
                | Error::MissingColumn(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
