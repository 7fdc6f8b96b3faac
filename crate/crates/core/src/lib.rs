//! Numeric core of the chest X-ray normalcy triage toolkit: the pyramid
//! classifier with reverse-mode gradients, and the evaluation kit.
//!
//! Everything is generic over [`Real`]; the `*64` aliases are the double
//! precision instantiations used by the tools.

pub mod error;
pub mod eval;
pub mod io;
pub mod net;
pub mod scalar;
pub mod tensor;

pub use error::{CoreError, Result};
pub use scalar::Real;
pub use tensor::Tensor;

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type TensorGraph64 = net::TensorGraph<f64>;
pub type TensorGraph32 = net::TensorGraph<f32>;
pub type ParamStore64 = net::ParamStore<f64>;
pub type ScoreTable64 = eval::ScoreTable<f64>;
pub type RocCurve64 = eval::RocCurve<f64>;
pub type OperatingPoint64 = eval::OperatingPoint<f64>;
