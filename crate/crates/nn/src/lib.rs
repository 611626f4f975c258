//! A minimal, self-contained deep-learning stack for the shock-detection
//! networks used by the hybrid DG/FV solver.
//!
//! The crate provides exactly what those networks need and nothing more:
//! dense 4D tensors ([`Tensor4`]), 2D convolution, batch normalization,
//! leaky-ReLU / sigmoid activations, a deep-supervision weighted
//! cross-entropy loss, hand-written reverse-mode gradients for all of the
//! above, and the Adam optimizer. On top of the kernels sit the fixed
//! edge-detection network ([`HedNetwork`]), its training loop, checkpoint
//! I/O, the synthetic training-data generator ([`datagen`]), and the two
//! solver-facing inference adapters ([`AnnsiFlagger`], [`AnnslLocalizer`]).
//!
//! All kernels are generic over [`Real`] so that training runs in `f32`
//! while gradient checks run in `f64` against central finite differences.

pub mod act;
pub mod adam;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod datagen;
pub mod error;
pub mod gradcheck;
pub mod hed;
pub mod infer;
pub mod loss;
pub mod real;
pub mod tensor;
pub mod train;

pub use adam::Adam;
pub use batchnorm::BatchNormLayer;
pub use conv::ConvLayer;
pub use error::NnError;
pub use hed::{HedNetwork, SideKernel};
pub use infer::{AnnsiFlagger, AnnslLocalizer};
pub use loss::WeightConvention;
pub use real::Real;
pub use tensor::Tensor4;
pub use train::TrainConfig;
