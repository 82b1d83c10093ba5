use thiserror::Error;

/// Errors produced by model construction, data handling and inference.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("data: {0}")]
    Data(String),

    #[error("model: {0}")]
    Model(String),

    /// A constrained parameter sits on the boundary of its scale domain, so
    /// the estimation-scale transform is not finite.
    #[error("parameter `{name}` is at the boundary of its scale domain (value {value})")]
    Boundary { name: String, value: f64 },

    /// A particle weight evaluated to NaN or +inf (-inf is a legal weight of
    /// zero). `observation` is the 1-based observation number.
    #[error("non-finite particle weight at observation {observation}")]
    NonFiniteWeight { observation: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
