//! Nudging data assimilation for spectral semilinear parabolic models observed through noisy,
//! coarse-scale, multiplicative observations.
//!
//! The crate simulates a reference solution `u' + A u = F(u)`, feeds its coarse observations
//! `I_delta u dt + G_delta(u) dW` into a nudged estimate `v`, and measures how the error
//! `w = u - v` behaves: mean-square decay, noise floors, tail suprema and the constants that
//! control them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod io;
pub mod models;
pub mod noise;
pub mod observation;
pub mod spectral;
pub mod triple;

pub use config::{parse_config, RunConfig};
pub use error::{Error, Result};
pub use harness::{Execution, Experiment};
pub use integrator::{ErrorSeries, StepConfig, Stepper};
pub use noise::{NoiseKind, NoiseModel, QSpec};
pub use observation::{eta0, ObservationKind, ObservationOperator};
pub use models::{GridField, KappaSample, VectorSpectrum};
pub use triple::{Basis, Field, ModelId, ModelParams, ModelSpec, NormConvention, Space};
