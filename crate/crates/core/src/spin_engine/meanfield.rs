use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::{
    mean, rotate_equatorial, DecoherenceModel, IsingModel, PulseEvent, PulseSequence, SequenceOutcome,
    SpinBackend, SpinConfiguration, TrajectoryRecord,
};

/// Per-spin mean-field evolution.
///
/// During dressing each spin precesses about ẑ at ω_i = Σ_j J_ij s_j^z/2 plus
/// its linear field. The s^z components are constants of this flow, so the
/// fields are constant within an event and the precession is applied as an
/// exact rotation.
#[derive(Debug, Clone)]
pub struct MeanFieldBackend<T> {
    pub model: IsingModel<T>,
    pub decoherence: DecoherenceModel<T>,
}

impl<T: Real> MeanFieldBackend<T> {
    pub fn new(model: IsingModel<T>, decoherence: DecoherenceModel<T>) -> Self {
        Self { model, decoherence }
    }

    /// Precession rates ω_i for the current configuration.
    pub fn fields(&self, spins: &[Vec3<T>]) -> Vec<T> {
        let j = &self.model.couplings;
        (0..spins.len())
            .map(|i| {
                let row = j.row(i);
                let zz = row
                    .iter()
                    .zip(spins)
                    .fold(T::zero(), |acc, (&jij, s)| acc + jij * s.z);
                T::half() * zz + self.model.linear_field(i)
            })
            .collect()
    }

    /// Evolves an explicit initial Bloch set instead of the sequence's product state.
    pub fn evolve_from(&self, spins: Vec<Vec3<T>>, sequence: &PulseSequence<T>) -> Result<SequenceOutcome<T>> {
        sequence.validate()?;
        self.decoherence.validate()?;
        if spins.len() != self.model.len() {
            return Err(crate::error::invalid("spins", "count differs from the coupling matrix"));
        }
        let mut spins = spins;
        let mut time = T::zero();
        let mut dress_time = T::zero();
        let mut echoes = 0usize;
        let mut readout = None;
        let record = |event: usize, time: T, echoes: usize, spins: &[Vec3<T>]| {
            let m = mean(spins);
            TrajectoryRecord {
                event,
                time,
                mean: m,
                contrast: m.norm(),
                echoes,
            }
        };
        let mut trajectory = vec![record(0, time, echoes, &spins)];
        for (k, event) in sequence.events.iter().enumerate() {
            match *event {
                PulseEvent::Dress { duration } => {
                    let omega = self.fields(&spins);
                    let shrink = self.decoherence.coherence_factor(duration);
                    for (s, w) in spins.iter_mut().zip(&omega) {
                        let mut r = s.rotated_z(-*w * duration);
                        r.x *= shrink;
                        r.y *= shrink;
                        if !r.is_finite() {
                            return Err(Error::Stiffness {
                                event: k,
                                detail: format!("non-finite Bloch vector (field {})", w.to_f64_lossy()),
                            });
                        }
                        *s = r;
                    }
                    time += duration;
                    dress_time += duration;
                }
                PulseEvent::Rotate {
                    axis_angle,
                    angle,
                    duration,
                    echo,
                } => {
                    for s in spins.iter_mut() {
                        *s = rotate_equatorial(s, axis_angle, angle);
                    }
                    time += duration;
                    if echo {
                        echoes += 1;
                    }
                }
                PulseEvent::Readout { phase } => {
                    readout = Some(super::fringe_probability(&mean(&spins), phase));
                }
            }
            trajectory.push(record(k + 1, time, echoes, &spins));
        }
        Ok(SequenceOutcome {
            trajectory,
            spins: spins.clone(),
            final_state: SpinConfiguration::BlochSet(spins),
            echo_count: echoes,
            dressing_time: dress_time,
            surviving_fraction: self.decoherence.survival(dress_time),
            readout_probability: readout,
        })
    }
}

impl<T: Real> SpinBackend<T> for MeanFieldBackend<T> {
    fn evolve(&self, sequence: &PulseSequence<T>) -> Result<SequenceOutcome<T>> {
        let s0 = sequence.initial.bloch();
        self.evolve_from(vec![s0; self.model.len()], sequence)
    }

    fn name(&self) -> &'static str {
        "meanfield"
    }
}

/// Fixed-step RK4 for ds_i/dt = B_i(s) × s_i over `duration`.
///
/// The step is min(0.1/max|B|, duration/20, `max_step`).
pub fn integrate_bloch_rk4<T, F>(field: F, spins: &mut [Vec3<T>], duration: T, max_step: T) -> Result<()>
where
    T: Real,
    F: Fn(&[Vec3<T>]) -> Vec<Vec3<T>>,
{
    if duration <= T::zero() {
        return Ok(());
    }
    let deriv = |s: &[Vec3<T>]| -> Vec<Vec3<T>> {
        field(s).iter().zip(s).map(|(b, si)| b.cross(si)).collect()
    };
    let bmax = field(spins).iter().fold(T::zero(), |m, b| m.max(b.norm()));
    let mut h = (duration / T::lit(20.0)).min(max_step);
    if bmax > T::zero() {
        h = h.min(T::lit(0.1) / bmax);
    }
    let steps = (duration / h).ceil().to_f64_lossy() as usize;
    let h = duration / T::from_usize_lossy(steps.max(1));
    let n = spins.len();
    let axpy = |a: &[Vec3<T>], k: &[Vec3<T>], c: T| -> Vec<Vec3<T>> {
        (0..n).map(|i| a[i] + k[i] * c).collect()
    };
    let six = T::lit(6.0);
    for step in 0..steps.max(1) {
        let k1 = deriv(spins);
        let k2 = deriv(&axpy(spins, &k1, h * T::half()));
        let k3 = deriv(&axpy(spins, &k2, h * T::half()));
        let k4 = deriv(&axpy(spins, &k3, h));
        for i in 0..n {
            spins[i] += (k1[i] + k2[i] * T::two() + k3[i] * T::two() + k4[i]) * (h / six);
            if !spins[i].is_finite() {
                return Err(Error::Stiffness {
                    event: step,
                    detail: format!("spin {i} diverged at t = {}", (h * T::from_usize_lossy(step)).to_f64_lossy()),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::CouplingMatrix;
    use crate::spin_engine::build_spin_echo_sequence;

    #[test]
    fn rk4_matches_exact_rotation() {
        let m = CouplingMatrix::from_dense(2, vec![0.0, -0.3, -0.3, 0.0], vec![0.0; 2]).unwrap();
        let be = MeanFieldBackend::new(IsingModel::new(m, false), DecoherenceModel::none());
        let s0 = vec![Vec3::from_polar(1.0, 0.2), Vec3::from_polar(0.4, -1.0)];
        let seq = PulseSequence::new(super::super::InitialState::new(0.0, 0.0)).dress(3.0);
        let exact = be.evolve_from(s0.clone(), &seq).unwrap().spins;
        let mut s = s0;
        integrate_bloch_rk4(
            |sp: &[Vec3<f64>]| be.fields(sp).into_iter().map(|w| Vec3::new(0.0, 0.0, -w)).collect(),
            &mut s,
            3.0,
            0.01,
        )
        .unwrap();
        for (a, b) in s.iter().zip(&exact) {
            assert!(a.distance(b) < 1e-9);
        }
    }

    #[test]
    fn decoherence_shrinks_equatorial_norm() {
        let m = CouplingMatrix::uniform(3, -0.01);
        let dec = DecoherenceModel {
            contrast_decay_rate: 0.02,
            atom_loss_rate: 0.01,
        };
        let be = MeanFieldBackend::new(IsingModel::new(m, true), dec);
        let out = be.evolve(&build_spin_echo_sequence(std::f64::consts::FRAC_PI_2, 10.0, 0.0)).unwrap();
        for s in &out.spins {
            assert!((s.norm() - (-0.2f64).exp()).abs() < 1e-12);
        }
        assert!((out.surviving_fraction - (-0.1f64).exp()).abs() < 1e-15);
    }
}
