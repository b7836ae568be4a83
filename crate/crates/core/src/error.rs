use thiserror::Error;

/// Errors raised by body construction and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResistError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point ({x}, {y}, {z}) lies outside the cylinder over the unit disc")]
    OutsideCylinder { x: f64, y: f64, z: f64 },

    #[error("query point ({x}, {y}) lies outside the open unit disc")]
    OutsideDomain { x: f64, y: f64 },

    #[error("profile is not convex and monotone: {0}")]
    NotConvex(String),

    #[error("apex radius {0} must be strictly below 1")]
    ApexOnBoundary(f64),

    #[error("no tangent lines: point lies inside the closed unit disc (r = {0})")]
    NoTangent(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, ResistError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ResistError {
    ResistError::InvalidInput(msg.into())
}
