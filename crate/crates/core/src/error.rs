use thiserror::Error;

/// Errors raised by the numerical engines and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series for {what} diverges at L = {l}")]
    Divergent { what: &'static str, l: f64 },

    #[error("truncation degree exceeds cap {cap} (L = {l}, r = {r})")]
    CapExceeded { cap: usize, l: f64, r: f64 },

    #[error("zero near contour: min |f| = {min_modulus:e} below threshold {threshold:e}")]
    ZeroNearContour { min_modulus: f64, threshold: f64 },

    #[error("phase refinement exhausted at depth {depth}")]
    RefinementExhausted { depth: u32 },

    #[error("winding number {raw} is not within tolerance of an integer")]
    NonIntegerWinding { raw: f64 },

    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("polynomial degree {degree} above oracle cap {cap}")]
    DegreeTooLarge { degree: usize, cap: usize },

    #[error("quadrature did not converge with {nodes} nodes (last change {last_change:e})")]
    QuadNoConvergence { nodes: usize, last_change: f64 },

    #[error("evaluation point within {distance:e} of a pole")]
    PoleProximity { distance: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("circle is outside the certified radius {certified} of the sample")]
    OutsideCertifiedRadius { certified: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
