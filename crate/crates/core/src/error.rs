use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown rule `{0}` (expected one of: trapezium, simpson, gauss_legendre_2)")]
    UnknownRule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("crossing limits unsupported: l(x) > u(x) at x = {x} (l = {lower}, u = {upper})")]
    CrossingLimits { x: f64, lower: f64, upper: f64 },

    #[error("non-finite value {value} at ({x}, {y})")]
    NonFinite { x: f64, y: f64, value: f64 },

    #[error("tolerance {eps:e} below roundoff bound {floor:e} (4 (b-a) D mu)")]
    ToleranceBelowRoundoff { eps: f64, floor: f64 },

    #[error(
        "no finite-difference stencil for the order-{order} derivative along {axis} fits the region; \
         supply deriv_sup_x/deriv_sup_y as injected bounds"
    )]
    StencilDoesNotFit { axis: char, order: u32 },

    #[error("reference integral did not converge after {doublings} doublings (last change {last_change:e})")]
    OracleNotConverged { doublings: u32, last_change: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("problem file: {0}")]
    ProblemFile(String),
}

impl Error {
    /// Errors raised by the numerical pipeline rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CrossingLimits { .. }
                | Error::NonFinite { .. }
                | Error::ToleranceBelowRoundoff { .. }
                | Error::StencilDoesNotFit { .. }
                | Error::OracleNotConverged { .. }
        )
    }
}
