//! Pulse sequences: dressing intervals, instantaneous microwave rotations
//! and a final fringe readout.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseEvent<T> {
    /// Ising evolution under the dressing light for `duration` µs.
    Dress { duration: T },
    /// Rotation by `angle` about the equatorial axis (cos a, sin a, 0).
    ///
    /// Pulses are instantaneous; `duration` only advances the clock.
    /// `echo` marks refocusing π pulses so outcomes can undo them.
    Rotate {
        axis_angle: T,
        angle: T,
        duration: T,
        echo: bool,
    },
    /// Final π/2 analysis pulse with phase α.
    Readout { phase: T },
}

/// Product initial state |θ, φ⟩ = cos(θ/2) e^{iφ}|↑⟩ + sin(θ/2)|↓⟩ on every spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState<T> {
    pub theta: T,
    pub phi: T,
}

impl<T: Real> InitialState<T> {
    pub fn new(theta: T, phi: T) -> Self {
        Self { theta, phi }
    }

    pub fn bloch(&self) -> Vec3<T> {
        Vec3::from_polar(self.theta, self.phi)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta<T> {
    pub cycles: usize,
    pub tau_r: T,
    pub tau_x: T,
    /// Transverse-field rotation per cycle, hτ_X (rad).
    pub h_tau_x: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence<T> {
    pub initial: InitialState<T>,
    pub events: Vec<PulseEvent<T>>,
    pub meta: SequenceMeta<T>,
}

impl<T: Real> PulseSequence<T> {
    pub fn new(initial: InitialState<T>) -> Self {
        Self {
            initial,
            events: Vec::new(),
            meta: SequenceMeta::default(),
        }
    }

    pub fn dress(mut self, duration: T) -> Self {
        self.events.push(PulseEvent::Dress { duration });
        self
    }

    pub fn rotate(mut self, axis_angle: T, angle: T) -> Self {
        self.events.push(PulseEvent::Rotate {
            axis_angle,
            angle,
            duration: T::zero(),
            echo: false,
        });
        self
    }

    /// Refocusing π pulse about x̂.
    pub fn echo(mut self) -> Self {
        self.events.push(PulseEvent::Rotate {
            axis_angle: T::zero(),
            angle: T::PI(),
            duration: T::zero(),
            echo: true,
        });
        self
    }

    /// Replaces any existing readout with a final one at phase `alpha`.
    pub fn with_readout(mut self, alpha: T) -> Self {
        self.events.retain(|e| !matches!(e, PulseEvent::Readout { .. }));
        self.events.push(PulseEvent::Readout { phase: alpha });
        self
    }

    pub fn total_dressing_time(&self) -> T {
        self.events.iter().fold(T::zero(), |acc, e| match e {
            PulseEvent::Dress { duration } => acc + *duration,
            _ => acc,
        })
    }

    /// Summed angle of the non-echo rotations.
    pub fn total_rotation(&self) -> T {
        self.events.iter().fold(T::zero(), |acc, e| match e {
            PulseEvent::Rotate { angle, echo: false, .. } => acc + *angle,
            _ => acc,
        })
    }

    pub fn echo_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, PulseEvent::Rotate { echo: true, .. }))
            .count()
    }

    pub fn readout_phase(&self) -> Option<T> {
        match self.events.last() {
            Some(PulseEvent::Readout { phase }) => Some(*phase),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.events.len();
        for (k, e) in self.events.iter().enumerate() {
            match e {
                PulseEvent::Dress { duration } => {
                    if !(duration.is_finite() && *duration >= T::zero()) {
                        return Err(invalid("duration", format!("event {k}: must be finite and ≥ 0")));
                    }
                }
                PulseEvent::Rotate {
                    axis_angle,
                    angle,
                    duration,
                    ..
                } => {
                    if !(axis_angle.is_finite() && angle.is_finite()) {
                        return Err(invalid("rotation", format!("event {k}: non-finite angle")));
                    }
                    if !(duration.is_finite() && *duration >= T::zero()) {
                        return Err(invalid("duration", format!("event {k}: must be finite and ≥ 0")));
                    }
                }
                PulseEvent::Readout { phase } => {
                    if k + 1 != n {
                        return Err(invalid("readout", format!("event {k}: readout must be the last event")));
                    }
                    if !phase.is_finite() {
                        return Err(invalid("readout", "non-finite phase"));
                    }
                }
            }
        }
        let t = self.initial.theta;
        if !(t >= T::zero() && t <= T::PI()) || !self.initial.phi.is_finite() {
            return Err(invalid("theta", "initial tilt must lie in [0, π]"));
        }
        Ok(())
    }
}

/// Ramsey sequence with a single echo: |θ⟩, dress τ_R/2, π_x, dress τ_R/2,
/// π/2 readout at phase α.
pub fn build_spin_echo_sequence<T: Real>(theta: T, tau_r: T, alpha: T) -> PulseSequence<T> {
    let half = tau_r * T::half();
    let mut seq = PulseSequence::new(InitialState::new(theta, T::zero()))
        .dress(half)
        .echo()
        .dress(half)
        .with_readout(alpha);
    seq.meta = SequenceMeta {
        cycles: 1,
        tau_r,
        tau_x: T::zero(),
        h_tau_x: T::zero(),
    };
    seq
}

/// Where refocusing pulses go in a Floquet train.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchoPlacement {
    /// Each dressing block is split in half around a π_x pulse
    /// (k + 1 echoes for k cycles).
    #[default]
    EveryBlock,
    /// No refocusing; linear shifts are not cancelled.
    None,
}

/// Floquet train of k cycles with the first dressing interval split:
/// Dress(τ_R/2) [R_x(hτ_X) Dress(τ_R)]^{k−1} R_x(hτ_X) Dress(τ_R/2).
///
/// Validity of k ≥ 1 and hτ_X ∈ [0, π/2) is left to the caller; k = 0
/// yields an event-free sequence.
pub fn build_floquet_sequence<T: Real>(
    theta: T,
    phi0: T,
    k: usize,
    tau_r: T,
    tau_x: T,
    h: T,
    echo: EchoPlacement,
) -> PulseSequence<T> {
    let angle = h * tau_x;
    let mut seq = PulseSequence::new(InitialState::new(theta, phi0));
    let block = |seq: PulseSequence<T>, t: T| match echo {
        EchoPlacement::EveryBlock => seq.dress(t * T::half()).echo().dress(t * T::half()),
        EchoPlacement::None => seq.dress(t),
    };
    if k > 0 {
        seq = block(seq, tau_r * T::half());
        for cycle in 0..k {
            seq.events.push(PulseEvent::Rotate {
                axis_angle: T::zero(),
                angle,
                duration: tau_x,
                echo: false,
            });
            let t = if cycle + 1 == k { tau_r * T::half() } else { tau_r };
            seq = block(seq, t);
        }
    }
    seq.meta = SequenceMeta {
        cycles: k,
        tau_r,
        tau_x,
        h_tau_x: angle,
    };
    seq
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_sequence_shape() {
        let s = build_spin_echo_sequence(1.0_f64, 40.0, 0.3);
        s.validate().unwrap();
        assert_eq!(s.echo_count(), 1);
        assert_eq!(s.total_dressing_time(), 40.0);
        assert_eq!(s.readout_phase(), Some(0.3));
        match (&s.events[0], &s.events[2]) {
            (PulseEvent::Dress { duration: a }, PulseEvent::Dress { duration: b }) => assert_eq!(a, b),
            other => panic!("unexpected events {other:?}"),
        }
    }

    #[test]
    fn floquet_totals() {
        let s = build_floquet_sequence(1.0_f64, 0.0, 4, 10.0, 1.0, 0.12, EchoPlacement::EveryBlock);
        s.validate().unwrap();
        assert!((s.total_dressing_time() - 40.0).abs() < 1e-12);
        assert!((s.total_rotation() - 0.48).abs() < 1e-12);
        assert_eq!(s.echo_count(), 5);
        assert_eq!(s.meta.cycles, 4);
        let bare = build_floquet_sequence(1.0_f64, 0.0, 4, 10.0, 1.0, 0.12, EchoPlacement::None);
        assert_eq!(bare.echo_count(), 0);
        assert!((bare.total_dressing_time() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn readout_must_be_last() {
        let mut s = build_spin_echo_sequence(1.0_f64, 1.0, 0.0);
        s.events.push(PulseEvent::Dress { duration: 1.0 });
        assert!(s.validate().is_err());
        let bad = PulseSequence::new(InitialState::new(1.0_f64, 0.0)).dress(-1.0);
        assert!(bad.validate().is_err());
    }
}
