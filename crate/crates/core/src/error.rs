use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("collision floor violated: |q| = {radius:e} < {floor:e}")]
    Collision { radius: f64, floor: f64 },

    #[error("trajectory crossed the collision floor near t = {time}")]
    CollisionCrossing { time: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("integral drift {drift:e} exceeds budget {budget:e}")]
    DriftBudget { drift: f64, budget: f64 },

    #[error("outside the element domain: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {detail}")]
    Parameter { name: &'static str, detail: String },

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("transversality violated at {point:?}: value {value:e}")]
    Transversality { point: [f64; 4], value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            detail: detail.into(),
        }
    }
}
