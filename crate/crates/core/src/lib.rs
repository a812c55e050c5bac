//! Rydberg-dressed Ising dynamics in dilute atomic gases.
//!
//! The crate is generic over the floating-point scalar ([`Real`], implemented
//! for `f32` and `f64`); the aliases at the bottom fix it to `f64`.

// `!(x > 0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cloud;
pub mod error;
pub mod floquet;
pub mod numerics;
pub mod pair_potential;
pub mod scalar;
pub mod spin_engine;
pub mod vec3;

pub use error::{Error, Result};
pub use scalar::{angular_to_khz, mhz_to_angular, wrap_phase, Real};
pub use vec3::{Mat3, Vec3};

pub use analysis::{fit_chi, fit_fringe, fit_twisting, zero_phase_contour, FitResult, PhaseMap};
pub use cloud::{coupling_matrix, meanfield_chi, sample_cloud, AtomCloud, BeamProfile, CouplingMatrix};
pub use floquet::{fixed_points, map_fixed_points, FixedPointSet, FloquetParams};
pub use pair_potential::{DressingParams, PairPotentialCurve};
pub use spin_engine::{IsingModel, PulseSequence, SequenceOutcome, SpinBackend, SpinConfiguration};

pub type DressingParams64 = pair_potential::DressingParams<f64>;
pub type DressingParams32 = pair_potential::DressingParams<f32>;
pub type AtomCloud64 = cloud::AtomCloud<f64>;
pub type CouplingMatrix64 = cloud::CouplingMatrix<f64>;
pub type PulseSequence64 = spin_engine::PulseSequence<f64>;
pub type SequenceOutcome64 = spin_engine::SequenceOutcome<f64>;
pub type FloquetParams64 = floquet::FloquetParams<f64>;
pub type FitResult64 = analysis::FitResult<f64>;
pub type PhaseMap64 = analysis::PhaseMap<f64>;
pub type Vec3f64 = vec3::Vec3<f64>;
pub type Vec3f32 = vec3::Vec3<f32>;
