//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The amplitude propagation exceeded its time-bin budget.
    #[error("simulation did not terminate within {bound} time bins (reached bin {reached})")]
    NonTerminating { bound: u64, reached: u64 },

    /// The path-enumeration oracle refuses configurations it cannot
    /// enumerate responsibly.
    #[error("oracle guard: n_stages {n} exceeds the enumeration limit {max}")]
    OracleGuard { n: usize, max: usize },

    /// A probability distribution handed to the sampler is malformed.
    #[error("malformed distribution: {0}")]
    MalformedDistribution(String),

    /// An error during imaging, annotated with the offending pixel.
    #[error("imaging error at pixel ({x}, {y}): {source}")]
    Imaging {
        x: usize,
        y: usize,
        #[source]
        source: Box<Error>,
    },

    /// Requested round count does not fit the canonical aperture budget.
    #[error(
        "capacity exceeded: {element} aperture fits {capacity} rounds at spacing {spacing} \
         (requested {requested})"
    )]
    Capacity {
        element: String,
        capacity: usize,
        requested: usize,
        spacing: f64,
    },

    /// A layout failed its structural invariants.
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    /// The geometric trace left the apparatus before finishing.
    #[error("trace incomplete after {completed_rounds} rounds; last hit {last_hit}")]
    TraceIncomplete {
        completed_rounds: usize,
        last_hit: String,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn at_pixel(self, x: usize, y: usize) -> Self {
        Error::Imaging {
            x,
            y,
            source: Box::new(self),
        }
    }
}
