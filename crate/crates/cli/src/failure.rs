use std::fmt;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DIMENSION: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

/// An error together with the process exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self::new(EXIT_CONFIG, anyhow::anyhow!("{msg}"))
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        Self::new(EXIT_INPUT, anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exit {}: {:#}", self.code, self.error)
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub trait ExitCodeExt<T> {
    /// Tags the error with `code`, except dimension mismatches, which always
    /// map to [`EXIT_DIMENSION`].
    fn exit_with(self, code: u8, context: impl fmt::Display) -> CliResult<T>;
}

impl<T> ExitCodeExt<T> for corola::Result<T> {
    fn exit_with(self, code: u8, context: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| {
            let code = match e {
                corola::Error::Dimension { .. } => EXIT_DIMENSION,
                _ => code,
            };
            Failure::new(code, anyhow::Error::new(e).context(context.to_string()))
        })
    }
}

impl<T> ExitCodeExt<T> for std::io::Result<T> {
    fn exit_with(self, code: u8, context: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure::new(code, anyhow::Error::new(e).context(context.to_string())))
    }
}
