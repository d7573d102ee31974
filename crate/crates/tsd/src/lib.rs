//! Temporal sequence distillation: compress a length-T video clip into a
//! length-T_s clip through a learned column-stochastic transformation matrix,
//! so that a downstream recognizer only ever sees the distilled frames.
//!
//! The crate is generic over the scalar type. Training code normally runs at
//! `f32`; oracle and gradient tests run at `f64`. Concrete aliases for the
//! common case live at the crate root.

pub mod checkpoint;
pub mod config;
pub mod nets;
pub mod saasbench;
pub mod scalar;
pub mod selectors;
pub mod synthvid;
pub mod tape;
pub mod tensor;
pub mod train;
pub mod tsd;

pub use scalar::Scalar;
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;

/// Default training precision.
pub type Tensor32 = Tensor<f32>;
/// Precision used by the oracle and gradient suites.
pub type Tensor64 = Tensor<f64>;
pub type TransformMatrix32 = tsd::TransformMatrix<f32>;
pub type TransformMatrix64 = tsd::TransformMatrix<f64>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
