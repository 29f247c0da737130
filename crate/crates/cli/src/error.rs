use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] prime_sphere::Error),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl CliError {
    /// 0 success, 1 I/O or self-test failure, 2 configuration, 3 insufficient data, 4 resource or convergence.
    pub fn exit_code(&self) -> i32 {
        use prime_sphere::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Domain(_) | E::Parse(_) | E::Unsupported(_)) => 2,
            CliError::Core(E::InsufficientData(_) | E::Undefined(_)) => 3,
            CliError::Core(E::Resource(_) | E::Convergence { .. }) => 4,
            CliError::Io { .. } | CliError::SelfTest(_) => 1,
        }
    }

    pub(crate) fn message(&self) -> String {
        match self {
            CliError::Config(m) => m.clone(),
            other => other.to_string(),
        }
    }
}
