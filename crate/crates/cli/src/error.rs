use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] curvelab_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        use curvelab_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(E::Solver(_) | E::Chain(_) | E::MissingProfile(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use curvelab_core::Error as E;

    #[test]
    fn numerical_failures_exit_3() {
        assert_eq!(CliError::Core(E::Solver("stiff".into())).exit_code(), 3);
        assert_eq!(CliError::Core(E::MissingProfile(4)).exit_code(), 3);
        assert_eq!(CliError::Config("bad".into()).exit_code(), 2);
        assert_eq!(CliError::Io(std::io::Error::other("x")).exit_code(), 2);
    }
}
