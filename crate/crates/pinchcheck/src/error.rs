use pinchcheck_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 2 for bad input, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Output(_) => 1,
            CliError::Core(e) => match e {
                CoreError::InvalidDimension(_)
                | CoreError::InvalidParameter(_)
                | CoreError::NotSymplectic { .. }
                | CoreError::NonConvex(_) => 2,
                _ => 1,
            },
        }
    }
}
