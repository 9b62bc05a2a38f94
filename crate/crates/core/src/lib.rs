//! Emulating EL+ completion reasoning with LSTM sequence learners.
//!
//! The crate covers the full experiment pipeline:
//!
//! - [`kb`]: names, the six normal-form axioms, canonical text format,
//!   normalization and anonymization;
//! - [`reasoner`]: breadth-first saturation under the six completion rules;
//! - [`supports`]: per-conclusion sets of original KB axioms;
//! - [`syngen`] / [`ontosample`]: synthetic KB generation and connected
//!   sampling from large ontology dumps;
//! - [`encode`]: reversible statement/KB/dataset encoding as scaled floats;
//! - [`nnet`]: from-scratch LSTM (Flat, Deep, Piecewise) with BPTT training
//!   and k-fold cross-validation;
//! - [`eval`]: Character/Atomic/Predicate distances, best-match scoring and
//!   the corruption sweep.
//!
//! Symbolic types are exact; the numeric pipeline is generic over
//! [`scalar::Scalar`] (`f32` or `f64`), with concrete aliases below.

pub mod encode;
pub mod eval;
pub mod kb;
pub mod nnet;
pub mod ontosample;
pub mod reasoner;
pub mod scalar;
pub mod seeding;
pub mod supports;
pub mod syngen;

pub use scalar::Scalar;

/// Dataset tensors in single precision (training default).
pub type Dataset32 = encode::DatasetTensors<f32>;
/// Dataset tensors in double precision (gradient checking, oracles).
pub type Dataset64 = encode::DatasetTensors<f64>;
/// Trained model in single precision.
pub type Model32 = nnet::Model<f32>;
/// Trained model in double precision.
pub type Model64 = nnet::Model<f64>;
