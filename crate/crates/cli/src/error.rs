//! CLI error taxonomy and exit codes.

use thiserror::Error;

/// A CLI failure, classed by which exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Flags or configuration values are inconsistent or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// The input data could not be parsed or is unusable.
    #[error("data error: {0}")]
    Parse(String),

    /// The environment failed us: I/O errors, oversized tables, internal
    /// failures.
    #[error("runtime error: {0}")]
    Runtime(String),
}

/// Exit code for configuration errors (same code `clap` uses for usage
/// errors).
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for data/parse errors.
pub const EXIT_PARSE: i32 = 3;
/// Exit code for runtime/environment errors.
pub const EXIT_RUNTIME: i32 = 4;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        CliError::Parse(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<assocmine::Error> for CliError {
    fn from(err: assocmine::Error) -> Self {
        match &err {
            assocmine::Error::InvalidConfig(_) => CliError::Config(err.to_string()),
            assocmine::Error::ConstantAttributes(_) => CliError::Parse(err.to_string()),
            assocmine::Error::InvalidInput(_) | assocmine::Error::TableTooLarge(_) => {
                CliError::Runtime(err.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_and_nonzero() {
        let codes = [
            CliError::config("x").exit_code(),
            CliError::parse("x").exit_code(),
            CliError::runtime("x").exit_code(),
        ];
        assert_eq!(codes, [2, 3, 4]);
    }

    #[test]
    fn core_errors_map_to_their_classes() {
        let config: CliError = assocmine::Error::invalid_config("bad").into();
        assert!(matches!(config, CliError::Config(_)));
        let constant: CliError =
            assocmine::Error::ConstantAttributes(vec!["K".into()]).into();
        assert!(matches!(constant, CliError::Parse(_)));
        assert!(constant.to_string().contains('K'));
        let input: CliError = assocmine::Error::invalid_input("bad").into();
        assert!(matches!(input, CliError::Runtime(_)));
    }
}
