use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments (exit code 2).
    #[error("{0}")]
    Validation(String),
    /// A computation could not be carried out (exit code 3).
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Core error raised while validating the config block at `key`.
    pub fn validation(key: &str, e: netpk::Error) -> Self {
        CliError::Validation(format!("{key}: {e}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 3,
        }
    }
}

impl From<netpk::Error> for CliError {
    fn from(e: netpk::Error) -> Self {
        use netpk::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::EmptyAgentSet
            | E::AgentOutOfRange { .. }
            | E::WeightConstraintViolated { .. }
            | E::RhoOutOfRange(_)
            | E::ModelMismatch(_)
            | E::InfeasibleAllocation { .. }
            | E::DimensionMismatch(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
