use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("alphabet of {states} states exceeds the cap of {cap}")]
    StateCap { states: usize, cap: usize },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
    #[error("symbol {symbol} is outside an alphabet of size {size}")]
    InvalidSymbol { symbol: usize, size: usize },
    #[error("incompatible model: {0}")]
    Incompatible(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, expected: &'static str) -> Result<f64> {
    if value.is_nan() || value < lo || value > hi {
        Err(Error::Domain { name, value, expected })
    } else {
        Ok(value)
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, 0.0, 1.0, "[0, 1]")
}
