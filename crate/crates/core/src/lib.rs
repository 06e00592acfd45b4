//! Evaluation toolkit for text-to-speech in low-resource tonal languages.
//!
//! The numeric code (`signal`, `metrics`) is generic over [`Scalar`]
//! (`f32`/`f64`); the aliases below fix it to `f64`, which is what the
//! command-line pipeline uses.

pub mod corpus;
pub mod metrics;
pub mod scalar;
pub mod signal;
pub mod stats;
pub mod textnorm;

pub use scalar::Scalar;

pub type Audio = signal::AudioBuffer<f64>;
pub type Mfcc = signal::MfccMatrix<f64>;
pub type Contour = signal::F0Contour<f64>;
