use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("degenerate pair: constraint independent of c")]
    DegeneratePair,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("floor of {n}^{c} unresolved at {bits} bits: n^c in [{lo}, {hi}]")]
    FloorAmbiguous {
        n: u64,
        c: f64,
        bits: u32,
        lo: f64,
        hi: f64,
    },

    #[error("{0} overflows the supported integer range")]
    Overflow(String),

    #[error("table does not cover N = {n} (limit P = {limit})")]
    TableDoesNotCover { n: u64, limit: u64 },

    #[error("number of summands s = {0} outside 2..=6")]
    InvalidSummands(usize),

    #[error("estimated memory {needed} bytes exceeds cap of {cap} bytes")]
    MemoryCap { needed: u64, cap: u64 },

    #[error("malformed table file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
