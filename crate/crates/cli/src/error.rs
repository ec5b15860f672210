use qumode_core::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("{0}")]
    Contract(Error),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    /// Core error raised while turning the config into objects.
    pub fn config(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::QuadratureNonConvergence { .. } => CliError::Numerical(e),
            Error::DegenerateGroundState { .. } => CliError::Contract(e),
            other => CliError::Config(other.to_string()),
        }
    }

    pub fn numerical(e: Error) -> Self {
        e.into()
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Contract(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. }
            | Error::QuadratureNonConvergence { .. }
            | Error::FreeEnergyUndefined { .. } => CliError::Numerical(e),
            Error::InvalidParameter(msg) => CliError::Config(msg),
            other => CliError::Contract(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::NoConvergence { iterations: 1 }).exit_code(), 3);
        assert_eq!(CliError::from(Error::FreeEnergyUndefined { beta: 0.0 }).exit_code(), 3);
        assert_eq!(CliError::from(Error::NoClusters).exit_code(), 4);
        assert_eq!(CliError::from(Error::InvalidParameter("x".into())).exit_code(), 2);
        assert_eq!(CliError::config(Error::InvalidState("x".into())).exit_code(), 2);
        assert_eq!(CliError::config(Error::DegenerateGroundState { multiplicity: 2 }).exit_code(), 4);
    }
}
