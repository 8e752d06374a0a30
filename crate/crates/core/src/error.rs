use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("no background-labelled pixels to fit")]
    NoSupport,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate basis column {0}: A_jj + beta1 = 0")]
    DegenerateColumn(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("problem too large for exhaustive search: {0} pixels (max 20)")]
    TooLarge(usize),

    #[error("affine estimation failed: {0}")]
    EstimationFailed(String),

    #[error("missing-pixel fill failed: {0}")]
    FillFailed(String),

    #[error("malformed image: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension { expected, found })
        }
    }
}
