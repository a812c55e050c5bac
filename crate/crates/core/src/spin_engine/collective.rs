use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::{
    integrate_bloch_rk4, rotate_equatorial, PulseEvent, PulseSequence, SequenceOutcome, SpinBackend,
    SpinConfiguration, TrajectoryRecord,
};

/// One Floquet cycle of the collective spin, written in the toggling frame:
/// T(κC/2) · R_x(β) · T(κC/2), where T(a) rotates about ẑ by a·s_z.
///
/// Its generator is proportional to (β, 0, κC s_z), i.e. the flow
/// b = (1, 0, Λ_eff s_z) with Λ_eff = κC/β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveMap<T> {
    /// Per-cycle twist κ = χτ_R (rad).
    pub twist: T,
    /// Per-cycle transverse rotation β = hτ_X (rad).
    pub rotation: T,
    pub contrast: T,
}

impl<T: Real> CollectiveMap<T> {
    pub fn new(twist: T, rotation: T, contrast: T) -> Self {
        Self {
            twist,
            rotation,
            contrast,
        }
    }

    #[inline]
    pub fn half_twist(&self) -> T {
        self.twist * self.contrast * T::half()
    }

    pub fn apply(&self, s: &Vec3<T>) -> Vec3<T> {
        let a = self.half_twist();
        let t1 = s.rotated_z(a * s.z);
        let r = t1.rotated_x(self.rotation);
        r.rotated_z(a * r.z)
    }

    pub fn lambda_eff(&self) -> T {
        self.twist * self.contrast / self.rotation
    }
}

/// Stroboscopic trajectory s, M(s), …, M^k(s).
pub fn evolve_collective<T: Real>(map: &CollectiveMap<T>, s0: Vec3<T>, k: usize) -> Vec<Vec3<T>> {
    let mut out = Vec::with_capacity(k + 1);
    let mut s = s0;
    out.push(s);
    for _ in 0..k {
        s = map.apply(&s);
        out.push(s);
    }
    out
}

/// Continuous mean-field flow ds/dt = b × s with b = (1, 0, Λ_eff s_z),
/// sampled at `samples + 1` equally spaced times over `duration`.
pub fn flow_line<T: Real>(lambda_eff: T, s0: Vec3<T>, duration: T, samples: usize) -> Result<Vec<Vec3<T>>> {
    if samples == 0 || !(duration >= T::zero()) {
        return Err(invalid("samples", "need at least one sample and a nonnegative duration"));
    }
    let dt = duration / T::from_usize_lossy(samples);
    let mut s = [s0];
    let mut out = vec![s0];
    for _ in 0..samples {
        integrate_bloch_rk4(
            |sp: &[Vec3<T>]| vec![Vec3::new(T::one(), T::zero(), lambda_eff * sp[0].z)],
            &mut s,
            dt,
            T::lit(1e-2),
        )?;
        out.push(s[0]);
    }
    Ok(out)
}

/// Single collective spin under a pulse sequence: dressing rotates about ẑ
/// by (χ C s_z − ω_lin)·t, with fixed contrast C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveBackend<T> {
    /// Mean-field twisting rate χ (rad/µs).
    pub chi: T,
    pub contrast: T,
    /// Uniform linear precession rate (rad/µs); cancelled by echoes.
    pub linear_rate: T,
}

impl<T: Real> CollectiveBackend<T> {
    pub fn new(chi: T, contrast: T) -> Self {
        Self {
            chi,
            contrast,
            linear_rate: T::zero(),
        }
    }
}

impl<T: Real> SpinBackend<T> for CollectiveBackend<T> {
    fn evolve(&self, sequence: &PulseSequence<T>) -> Result<SequenceOutcome<T>> {
        sequence.validate()?;
        if !(self.contrast >= T::zero() && self.contrast <= T::one()) {
            return Err(invalid("contrast", "must lie in [0, 1]"));
        }
        let c = self.contrast;
        let mut s = sequence.initial.bloch();
        let mut time = T::zero();
        let mut dress_time = T::zero();
        let mut echoes = 0usize;
        let mut readout = None;
        let record = |event, time, echoes, s: Vec3<T>| TrajectoryRecord {
            event,
            time,
            mean: s * c,
            contrast: c,
            echoes,
        };
        let mut trajectory = vec![record(0, time, echoes, s)];
        for (k, event) in sequence.events.iter().enumerate() {
            match *event {
                PulseEvent::Dress { duration } => {
                    s = s.rotated_z((self.chi * c * s.z - self.linear_rate) * duration);
                    time += duration;
                    dress_time += duration;
                }
                PulseEvent::Rotate {
                    axis_angle,
                    angle,
                    duration,
                    echo,
                } => {
                    s = rotate_equatorial(&s, axis_angle, angle);
                    time += duration;
                    if echo {
                        echoes += 1;
                    }
                }
                PulseEvent::Readout { phase } => {
                    readout = Some(super::fringe_probability(&(s * c), phase));
                }
            }
            trajectory.push(record(k + 1, time, echoes, s));
        }
        Ok(SequenceOutcome {
            trajectory,
            spins: vec![s * c],
            final_state: SpinConfiguration::Collective {
                direction: s,
                contrast: c,
            },
            echo_count: echoes,
            dressing_time: dress_time,
            surviving_fraction: T::one(),
            readout_probability: readout,
        })
    }

    fn name(&self) -> &'static str {
        "collective"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_engine::{build_floquet_sequence, EchoPlacement};

    #[test]
    fn map_preserves_norm_and_x_axis() {
        let m = CollectiveMap::new(0.3_f64, 0.1, 0.9);
        let s = Vec3::from_polar(0.7, 0.3);
        assert!((m.apply(&s).norm() - 1.0).abs() < 1e-15);
        assert!(m.apply(&Vec3::unit_x()).distance(&Vec3::unit_x()) < 1e-15);
    }

    #[test]
    fn zero_lambda_is_precession_about_x() {
        let beta = 0.1_f64;
        let m = CollectiveMap::new(0.0, beta, 1.0);
        let s0 = Vec3::from_polar(0.5, 0.0);
        let traj = evolve_collective(&m, s0, 10);
        assert!(traj[10].distance(&s0.rotated_x(1.0)) < 1e-13);
    }

    #[test]
    fn sequence_toggling_frame_matches_map() {
        let (chi, tau_r, h, tau_x) = (0.015_f64, 10.0, 0.12, 1.0);
        let be = CollectiveBackend {
            chi,
            contrast: 0.8,
            linear_rate: 0.37,
        };
        let seq = build_floquet_sequence(1.0, 0.2, 4, tau_r, tau_x, h, EchoPlacement::EveryBlock);
        let out = be.evolve(&seq).unwrap();
        let map = CollectiveMap::new(chi * tau_r, h * tau_x, 0.8);
        let want = evolve_collective(&map, Vec3::from_polar(1.0, 0.2), 4)[4];
        assert!((out.toggling_frame() * (1.0 / 0.8)).distance(&want) < 1e-12);
    }

    #[test]
    fn flow_line_conserves_energy() {
        let lam = 1.7_f64;
        let s0 = Vec3::from_polar(0.9, 0.4);
        let energy = |s: &Vec3<f64>| s.x + 0.5 * lam * s.z * s.z;
        let line = flow_line(lam, s0, 5.0, 50).unwrap();
        for s in &line {
            assert!((energy(s) - energy(&s0)).abs() < 1e-8);
        }
    }
}
