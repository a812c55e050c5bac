use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::{
    mean, DecoherenceModel, InitialState, IsingModel, PulseEvent, PulseSequence, SequenceOutcome, SpinBackend,
    SpinConfiguration, TrajectoryRecord,
};

pub const DEFAULT_MAX_EXACT_ATOMS: usize = 14;

/// Parallelise amplitude loops above this dimension.
const PAR_THRESHOLD: usize = 1 << 12;

/// Pure state of N spins in the s^z basis; bit i of the index set means spin i is ↑.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Product state |θ, φ⟩^⊗N.
    pub fn product(n: usize, initial: &InitialState<T>) -> Self {
        let (s, c) = (initial.theta * T::half()).sin_cos();
        let up = Complex::from_polar(c, initial.phi);
        let down = Complex::new(s, T::zero());
        let amps = (0..1usize << n)
            .map(|idx| {
                (0..n).fold(Complex::new(T::one(), T::zero()), |acc, i| {
                    acc * if idx >> i & 1 == 1 { up } else { down }
                })
            })
            .collect();
        Self { n, amps }
    }

    pub fn atoms(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(Complex::norm_sqr).fold(T::zero(), |a, b| a + b)
    }

    /// Multiplies each basis amplitude by exp(−i E_s t).
    pub fn apply_diagonal(&mut self, energies: &[T], t: T) {
        let phase = |a: &mut Complex<T>, e: &T| {
            *a *= Complex::from_polar(T::one(), -*e * t);
        };
        if self.amps.len() >= PAR_THRESHOLD {
            self.amps.par_iter_mut().zip(energies.par_iter()).for_each(|(a, e)| phase(a, e));
        } else {
            self.amps.iter_mut().zip(energies).for_each(|(a, e)| phase(a, e));
        }
    }

    /// Same single-spin rotation on every spin, in the Bloch frame of this crate:
    /// U = exp(+iβ(cos a σ_x − sin a σ_y)/2).
    pub fn rotate_all(&mut self, axis_angle: T, angle: T) {
        let (s, c) = (angle * T::half()).sin_cos();
        let i_s = Complex::new(T::zero(), s);
        let u01 = i_s * Complex::from_polar(T::one(), axis_angle);
        let u10 = i_s * Complex::from_polar(T::one(), -axis_angle);
        let c = Complex::new(c, T::zero());
        for q in 0..self.n {
            let mask = 1usize << q;
            let block = mask << 1;
            let kernel = |chunk: &mut [Complex<T>]| {
                // chunk covers indices with bit q = 0 in [0, mask) and 1 in [mask, block)
                let (lo, hi) = chunk.split_at_mut(mask);
                for (d, u) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (down, up) = (*d, *u);
                    *u = c * up + u01 * down;
                    *d = u10 * up + c * down;
                }
            };
            if self.amps.len() >= PAR_THRESHOLD {
                self.amps.par_chunks_mut(block).for_each(kernel);
            } else {
                self.amps.chunks_mut(block).for_each(kernel);
            }
        }
    }

    /// Single-spin Bloch vectors (2Re c↑c↓*, 2Im c↑c↓*, |c↑|² − |c↓|²).
    pub fn bloch_vectors(&self) -> Vec<Vec3<T>> {
        (0..self.n)
            .map(|q| {
                let mask = 1usize << q;
                let mut coh = Complex::new(T::zero(), T::zero());
                let mut z = T::zero();
                for (idx, a) in self.amps.iter().enumerate() {
                    if idx & mask != 0 {
                        coh += *a * self.amps[idx ^ mask].conj();
                        z += a.norm_sqr();
                    } else {
                        z -= a.norm_sqr();
                    }
                }
                Vec3::new(T::two() * coh.re, T::two() * coh.im, z)
            })
            .collect()
    }
}

/// Exact state-vector evolution; H_ZZ and the linear terms are diagonal, so
/// dressing is a per-basis-state phase.
#[derive(Debug, Clone)]
pub struct ExactBackend<T> {
    pub model: IsingModel<T>,
    pub decoherence: DecoherenceModel<T>,
    pub max_atoms: usize,
    energies: Vec<T>,
}

impl<T: Real> ExactBackend<T> {
    pub fn new(model: IsingModel<T>, decoherence: DecoherenceModel<T>) -> Result<Self> {
        Self::with_limit(model, decoherence, DEFAULT_MAX_EXACT_ATOMS)
    }

    pub fn with_limit(model: IsingModel<T>, decoherence: DecoherenceModel<T>, max_atoms: usize) -> Result<Self> {
        let n = model.len();
        if n > max_atoms || n >= usize::BITS as usize - 1 {
            return Err(Error::Capacity { atoms: n, limit: max_atoms });
        }
        let energies = diagonal_energies(&model);
        Ok(Self {
            model,
            decoherence,
            max_atoms,
            energies,
        })
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }
}

/// E_s = Σ_{i<j} J_ij m_i m_j + Σ_i h_i m_i with m = ±½.
fn diagonal_energies<T: Real>(model: &IsingModel<T>) -> Vec<T> {
    let n = model.len();
    let j = &model.couplings;
    let h: Vec<T> = (0..n).map(|i| model.linear_field(i)).collect();
    let energy = |idx: usize| {
        let m = |i: usize| if idx >> i & 1 == 1 { T::half() } else { -T::half() };
        let mut e = T::zero();
        for a in 0..n {
            let ma = m(a);
            e += h[a] * ma;
            for b in (a + 1)..n {
                e += j.get(a, b) * ma * m(b);
            }
        }
        e
    };
    let dim = 1usize << n;
    if dim >= PAR_THRESHOLD {
        (0..dim).into_par_iter().map(energy).collect()
    } else {
        (0..dim).map(energy).collect()
    }
}

impl<T: Real> SpinBackend<T> for ExactBackend<T> {
    fn evolve(&self, sequence: &PulseSequence<T>) -> Result<SequenceOutcome<T>> {
        sequence.validate()?;
        self.decoherence.validate()?;
        let n = self.model.len();
        let mut psi = StateVector::product(n, &sequence.initial);
        let mut time = T::zero();
        let mut dress_time = T::zero();
        let mut echoes = 0usize;
        let mut readout = None;
        let observe = |psi: &StateVector<T>, dress_time: T| -> Vec<Vec3<T>> {
            let f = self.decoherence.coherence_factor(dress_time);
            psi.bloch_vectors()
                .into_iter()
                .map(|b| Vec3::new(b.x * f, b.y * f, b.z))
                .collect()
        };
        let record = |event, time, echoes, spins: &[Vec3<T>]| {
            let m = mean(spins);
            TrajectoryRecord {
                event,
                time,
                mean: m,
                contrast: m.norm(),
                echoes,
            }
        };
        let mut spins = observe(&psi, dress_time);
        let mut trajectory = vec![record(0, time, echoes, &spins)];
        for (k, event) in sequence.events.iter().enumerate() {
            match *event {
                PulseEvent::Dress { duration } => {
                    psi.apply_diagonal(&self.energies, duration);
                    time += duration;
                    dress_time += duration;
                }
                PulseEvent::Rotate {
                    axis_angle,
                    angle,
                    duration,
                    echo,
                } => {
                    psi.rotate_all(axis_angle, angle);
                    time += duration;
                    if echo {
                        echoes += 1;
                    }
                }
                PulseEvent::Readout { .. } => {}
            }
            spins = observe(&psi, dress_time);
            if let PulseEvent::Readout { phase } = *event {
                readout = Some(super::fringe_probability(&mean(&spins), phase));
            }
            trajectory.push(record(k + 1, time, echoes, &spins));
        }
        Ok(SequenceOutcome {
            trajectory,
            spins,
            final_state: SpinConfiguration::StateVector(psi),
            echo_count: echoes,
            dressing_time: dress_time,
            surviving_fraction: self.decoherence.survival(dress_time),
            readout_probability: readout,
        })
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}
