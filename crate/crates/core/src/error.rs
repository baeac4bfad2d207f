use thiserror::Error;

use crate::multiindex::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("jets are not aligned: {0}")]
    Alignment(String),

    #[error("derivative of order {requested} requested from a function of class {class}")]
    Smoothness { requested: usize, class: String },

    #[error("point outside coefficient domain: {0}")]
    Domain(String),

    #[error("derivative of order {order} does not exist at x = {at}")]
    UndefinedDerivative { order: usize, at: String },

    #[error("black box failed on probe x^{alpha}: {reason}")]
    Probe { alpha: MultiIndex, reason: String },

    #[error("probe is not flat to order {order} at the origin")]
    Flatness { order: usize },

    #[error("caps do not cover the sphere: {0}")]
    Coverage(String),

    #[error("cone cutoff evaluated at the apex")]
    Apex,

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::Dimension { expected, got }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::dim(expected, got))
    }
}
