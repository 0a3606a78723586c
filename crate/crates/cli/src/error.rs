use std::fmt;

/// Exit status for invalid configuration or input.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a computed value is NaN or infinite.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("CONFIG_INVALID", message)
    }

    pub fn exit_code(&self) -> i32 {
        if self.code == "NON_FINITE" {
            EXIT_NUMERIC
        } else {
            EXIT_CONFIG
        }
    }

    /// `error code=<CODE> message="<text>"` on one line.
    pub fn line(&self) -> String {
        let msg: String = self
            .message
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        format!("error code={} message={:?}", self.code, msg)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}

impl From<dequant::Error> for CliError {
    fn from(e: dequant::Error) -> Self {
        use dequant::Error::*;
        let code = match &e {
            DegreeOverCap { .. } => "DEGREE_OVER_CAP",
            DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            NotPsd { .. } => "NOT_PSD",
            TraceMismatch { .. } => "TRACE_MISMATCH",
            NotNormalized { .. } => "NOT_NORMALIZED",
            IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            ExactRegime => "EXACT_REGIME",
            InvalidArgument(_) => "INVALID_ARGUMENT",
        };
        Self::new(code, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
