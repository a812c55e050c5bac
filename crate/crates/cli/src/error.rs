use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numerical(#[from] rydberg_ising::Error),

    #[error("self-test failed: {0} check(s) did not pass")]
    SelfTest(usize),
}

impl CliError {
    /// 2 for anything the user can fix in the config or invocation,
    /// 3 for failures inside the numerics.
    pub fn exit_code(&self) -> i32 {
        use rydberg_ising::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(E::InvalidParameter { .. } | E::Capacity { .. }) => 2,
            CliError::Numerical(_) | CliError::SelfTest(_) => 3,
        }
    }
}
