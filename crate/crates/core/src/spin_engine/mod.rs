//! Spin dynamics under pulse sequences with three interchangeable backends:
//! per-spin mean field, exact state vector and a single collective spin.
//!
//! Bloch vectors follow the phase convention of |θ, φ⟩ with the phase on
//! |↑⟩, so b = (sinθ cosφ, sinθ sinφ, cosθ) and a Hamiltonian ω s^z moves φ
//! by −ωt. Spin operators have eigenvalues ±½.

mod collective;
mod exact;
mod fringe;
mod meanfield;
mod sequence;

pub use collective::{evolve_collective, flow_line, CollectiveBackend, CollectiveMap};
pub use exact::{ExactBackend, StateVector, DEFAULT_MAX_EXACT_ATOMS};
pub use fringe::{fringe_probability, simulate_fringe, FringeSamples};
pub use meanfield::{integrate_bloch_rk4, MeanFieldBackend};
pub use sequence::{
    build_floquet_sequence, build_spin_echo_sequence, EchoPlacement, InitialState, PulseEvent,
    PulseSequence, SequenceMeta,
};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cloud::CouplingMatrix;
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Ising model H = Σ_{i<j} J_ij n_i n_j + Σ_i δ_i n_i with n = s^z + ½.
///
/// With `include_linear_terms = false` only the s^z s^z part is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel<T> {
    pub couplings: CouplingMatrix<T>,
    pub include_linear_terms: bool,
}

impl<T: Real> IsingModel<T> {
    pub fn new(couplings: CouplingMatrix<T>, include_linear_terms: bool) -> Self {
        Self {
            couplings,
            include_linear_terms,
        }
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    /// Coefficient of s_i^z in the Hamiltonian: ½Σ_j J_ij + δ_i, or 0.
    pub fn linear_field(&self, i: usize) -> T {
        if self.include_linear_terms {
            T::half() * self.couplings.row_sum(i) + self.couplings.light_shifts[i]
        } else {
            T::zero()
        }
    }
}

/// Phenomenological losses during dressing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceModel<T> {
    /// Contrast decay rate per unit dressing time (1/µs).
    pub contrast_decay_rate: T,
    /// Atom loss rate per unit dressing time (1/µs).
    pub atom_loss_rate: T,
}

impl<T: Real> DecoherenceModel<T> {
    pub fn none() -> Self {
        Self {
            contrast_decay_rate: T::zero(),
            atom_loss_rate: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast_decay_rate >= T::zero() && self.contrast_decay_rate.is_finite()) {
            return Err(invalid("contrast_decay_rate", "must be finite and ≥ 0"));
        }
        if !(self.atom_loss_rate >= T::zero() && self.atom_loss_rate.is_finite()) {
            return Err(invalid("atom_loss_rate", "must be finite and ≥ 0"));
        }
        Ok(())
    }

    pub fn coherence_factor(&self, dress_time: T) -> T {
        (-self.contrast_decay_rate * dress_time).exp()
    }

    pub fn survival(&self, dress_time: T) -> T {
        (-self.atom_loss_rate * dress_time).exp()
    }
}

/// State of the spin system in one of the three representations.
#[derive(Debug, Clone, PartialEq)]
pub enum SpinConfiguration<T> {
    BlochSet(Vec<Vec3<T>>),
    StateVector(StateVector<T>),
    Collective { direction: Vec3<T>, contrast: T },
}

impl<T: Real> SpinConfiguration<T> {
    /// Normalised mean spin ⟨S⟩/S.
    pub fn mean_bloch(&self) -> Vec3<T> {
        match self {
            SpinConfiguration::BlochSet(v) => mean(v),
            SpinConfiguration::StateVector(sv) => mean(&sv.bloch_vectors()),
            SpinConfiguration::Collective { direction, contrast } => *direction * *contrast,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpinConfiguration::BlochSet(v) => {
                if v.iter().any(|b| !b.is_finite() || b.norm() > T::one() + T::lit(1e-9)) {
                    return Err(invalid("bloch", "Bloch vectors must be finite with norm ≤ 1"));
                }
            }
            SpinConfiguration::StateVector(sv) => {
                let norm: T = sv.amplitudes().iter().map(Complex::norm_sqr).fold(T::zero(), |a, b| a + b);
                if (norm - T::one()).abs() > T::lit(1e-12) {
                    return Err(invalid("state", "state vector must be normalised"));
                }
            }
            SpinConfiguration::Collective { direction, contrast } => {
                if (direction.norm() - T::one()).abs() > T::lit(1e-9) {
                    return Err(invalid("direction", "collective direction must be a unit vector"));
                }
                if !(*contrast >= T::zero() && *contrast <= T::one()) {
                    return Err(invalid("contrast", "must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn mean<T: Real>(v: &[Vec3<T>]) -> Vec3<T> {
    if v.is_empty() {
        return Vec3::zero();
    }
    let mut acc = Vec3::zero();
    for b in v {
        acc += *b;
    }
    acc * (T::one() / T::from_usize_lossy(v.len()))
}

/// Snapshot at an event boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord<T> {
    /// 0 is the initial state; record k follows event k − 1.
    pub event: usize,
    pub time: T,
    /// ⟨S⟩/S in the laboratory frame.
    pub mean: Vec3<T>,
    pub contrast: T,
    /// Echo pulses applied so far.
    pub echoes: usize,
}

impl<T: Real> TrajectoryRecord<T> {
    /// Mean spin with the echo pulses undone.
    pub fn toggling(&self) -> Vec3<T> {
        toggle(self.mean, self.echoes)
    }
}

fn toggle<T: Real>(v: Vec3<T>, flips: usize) -> Vec3<T> {
    if flips % 2 == 1 {
        v.flipped_x()
    } else {
        v
    }
}

/// Result of evolving one pulse sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome<T> {
    pub trajectory: Vec<TrajectoryRecord<T>>,
    pub final_state: SpinConfiguration<T>,
    /// Per-spin Bloch vectors at the end, after decoherence.
    pub spins: Vec<Vec3<T>>,
    pub echo_count: usize,
    pub dressing_time: T,
    pub surviving_fraction: T,
    /// P↑ at the final readout, if the sequence has one.
    pub readout_probability: Option<T>,
}

impl<T: Real> SequenceOutcome<T> {
    pub fn mean(&self) -> Vec3<T> {
        self.trajectory.last().map(|r| r.mean).unwrap_or_else(Vec3::zero)
    }

    pub fn contrast(&self) -> T {
        self.mean().norm()
    }

    /// Mean spin with all echo pulses undone.
    pub fn toggling_frame(&self) -> Vec3<T> {
        toggle(self.mean(), self.echo_count)
    }

    /// Mean spin in the frame of a single-echo Ramsey sequence: laboratory
    /// frame for an odd echo count, one extra π_x otherwise.
    pub fn echo_frame(&self) -> Vec3<T> {
        toggle(self.mean(), self.echo_count + 1)
    }

    /// Ramsey phase φ read in the echo frame.
    pub fn phase(&self) -> T {
        self.echo_frame().azimuth()
    }

    /// Trajectory rendered as `event time Sx Sy Sz C` rows.
    pub fn trajectory_text(&self, toggling: bool) -> String {
        let mut out = String::from("# event\ttime_us\tSx\tSy\tSz\tC\n");
        for r in &self.trajectory {
            let m = if toggling { r.toggling() } else { r.mean };
            out.push_str(&format!(
                "{}\t{:.9e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\n",
                r.event,
                r.time.to_f64_lossy(),
                m.x.to_f64_lossy(),
                m.y.to_f64_lossy(),
                m.z.to_f64_lossy(),
                r.contrast.to_f64_lossy()
            ));
        }
        out
    }
}

/// Common interface of the three evolution backends.
pub trait SpinBackend<T: Real>: Sync {
    fn evolve(&self, sequence: &PulseSequence<T>) -> Result<SequenceOutcome<T>>;
    fn name(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    MeanField,
    Exact,
    Collective,
}

impl std::str::FromStr for BackendKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "meanfield" | "mean-field" | "mean_field" => Ok(BackendKind::MeanField),
            "exact" => Ok(BackendKind::Exact),
            "collective" => Ok(BackendKind::Collective),
            other => Err(invalid("backend", format!("unknown backend `{other}`"))),
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::MeanField => "meanfield",
            BackendKind::Exact => "exact",
            BackendKind::Collective => "collective",
        })
    }
}

/// Bloch-frame rotation by `angle` about the equatorial axis at `axis_angle`.
pub(crate) fn rotate_equatorial<T: Real>(b: &Vec3<T>, axis_angle: T, angle: T) -> Vec3<T> {
    if axis_angle == T::zero() {
        return b.rotated_x(angle);
    }
    let (s, c) = axis_angle.sin_cos();
    b.rotated(&Vec3::new(c, s, T::zero()), angle)
}
