use thiserror::Error;

use crate::instance::EdgeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("edge {0} enters root")]
    EdgeEntersRoot(EdgeId),

    #[error("edge {edge}: negative cost {cost}")]
    NegativeCost { edge: EdgeId, cost: String },

    #[error("terminal {0} equals root")]
    TerminalIsRoot(usize),

    #[error("solution references edge {edge} {count} times but it has multiplicity {mult}")]
    BadSelection {
        edge: EdgeId,
        count: usize,
        mult: u32,
    },

    #[error("infeasible: terminal {terminal} reaches connectivity {lambda} < {k} with every edge")]
    Infeasible {
        terminal: usize,
        lambda: u32,
        k: u32,
    },

    #[error("no priceable star at level {0}")]
    NoPriceableStar(u32),

    #[error("instance too large for exact search: {units} edge units > ceiling {ceiling}")]
    TooLarge { units: usize, ceiling: usize },

    #[error("universe of {size} nodes exceeds enumeration ceiling {ceiling}")]
    UniverseTooLarge { size: usize, ceiling: usize },

    #[error("set function is not positively T-intersecting supermodular: {0}")]
    NotSupermodular(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("generator gave up after {0} attempts")]
    RetryCapExhausted(usize),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}
