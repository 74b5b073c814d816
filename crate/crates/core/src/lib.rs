//! Semiclassical wavepacket experiments: coherent states under the dilation
//! flow, split-step Schrödinger evolution, classical phase-space structure
//! and position measurement.
//!
//! The numerical core is generic over the scalar type ([`scalar::Real`],
//! implemented for `f32` and `f64`). The aliases below fix it to `f64`.

pub mod classical;
pub mod config;
pub mod dilation;
pub mod error;
pub mod experiments;
pub mod measurement;
pub mod propagator;
pub mod scalar;
pub mod spectral;
pub mod wavepacket;

pub use error::{Error, Result};

pub type Grid64 = wavepacket::Grid<f64>;
pub type WaveFunction64 = wavepacket::WaveFunction<f64>;
pub type GaussianState64 = wavepacket::GaussianState<f64>;
pub type Moments64 = wavepacket::Moments<f64>;
pub type PotentialSpec64 = propagator::PotentialSpec<f64>;
pub type SplitStep64 = propagator::SplitStep<f64>;
pub type PhasePoint64 = classical::PhasePoint<f64>;
pub type ClassicalModel64 = classical::ClassicalModel<f64>;
pub type ManifoldCurve64 = classical::ManifoldCurve<f64>;
pub type HusimiGrid64 = measurement::HusimiGrid<f64>;
pub type BornSampler64 = measurement::BornSampler<f64>;
