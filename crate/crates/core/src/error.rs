use thiserror::Error;

/// Errors raised by the model, network and hitting-probability machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no adjustment coefficient: {0}")]
    NoAdjustmentCoefficient(String),

    #[error("exponential moment diverges before the cumulant reaches zero")]
    DivergentMoment,

    #[error("agent set is empty")]
    EmptyAgentSet,

    #[error("agent index {index} out of range for {count} agents")]
    AgentOutOfRange { index: usize, count: usize },

    #[error("column sum of weights for object {object} is {sum} > 1")]
    WeightConstraintViolated { object: usize, sum: f64 },

    #[error("enumeration too large: {states} states exceed the limit of {limit}")]
    EnumerationTooLarge { states: f64, limit: f64 },

    #[error("conditioning event deg(Q) > 0 has probability zero")]
    DegenerateConditioning,

    #[error("agent group has no edges in this realization")]
    IsolatedGroup,

    #[error("Pollaczek-Khintchine parameter {0} is outside [0, 1)")]
    RhoOutOfRange(f64),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("allocation infeasible: sum of rates {sum} exceeds adjustment coefficient {kappa}")]
    InfeasibleAllocation { sum: f64, kappa: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
