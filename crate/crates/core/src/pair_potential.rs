//! Rydberg pair potential near a Förster resonance and the dressed
//! ground-state interaction it induces.
//!
//! The Rydberg pair shift comes from a two-channel model: the |PP⟩ pair
//! state couples with strength `c = f(θ)·C3/r³` to a |SS'⟩ channel detuned by
//! the Förster defect Δ_F. The dressed interaction `J(r)` follows either from
//! exact diagonalisation of the two-atom dressing Hamiltonian or from the
//! fourth-order soft-core closed form.
//!
//! All frequencies are angular frequencies in rad/µs and lengths are in µm.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{bisect, symmetric_eigen};
use crate::scalar::Real;

/// C3 (in MHz·µm³, i.e. C3/2π) used by [`DressingParams::operating_point`].
///
/// Calibrated so that the mean-field shift `−(ρ/2)∫J d³r` at ρ = 0.14 µm⁻³,
/// Ω = 2π×1.9 MHz and Δ = 2π×21 MHz equals 2π×(15/3.5) kHz. The resulting
/// interaction range is r_c ≈ 4.16 µm.
pub const DEFAULT_C3_MHZ_UM3: f64 = 2617.47;

/// Förster defect of the 43P₃/₂ pair channel, in MHz.
pub const DEFAULT_FORSTER_DEFECT_MHZ: f64 = 42.0;

/// Interatomic-angle dependence of the resonant dipole coupling.
#[derive(Clone, Default)]
pub enum AngularFactor<T> {
    #[default]
    Isotropic,
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> AngularFactor<T> {
    pub fn custom<F: Fn(T) -> T + Send + Sync + 'static>(f: F) -> Self {
        AngularFactor::Custom(Arc::new(f))
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self, AngularFactor::Isotropic)
    }

    /// f(θ) for polar angle θ of the interatomic axis. Values outside [0, 1]
    /// (or non-finite) are rejected.
    pub fn eval(&self, theta: T) -> Result<T> {
        match self {
            AngularFactor::Isotropic => Ok(T::one()),
            AngularFactor::Custom(f) => {
                let v = f(theta);
                if v.is_finite() && v >= T::zero() && v <= T::one() {
                    Ok(v)
                } else {
                    Err(Error::Domain(format!(
                        "angular factor f({}) = {} outside [0, 1]",
                        theta.to_f64_lossy(),
                        v.to_f64_lossy()
                    )))
                }
            }
        }
    }
}

impl<T> fmt::Debug for AngularFactor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngularFactor::Isotropic => write!(f, "Isotropic"),
            AngularFactor::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Laser and atomic parameters defining the dressed potential.
#[derive(Debug, Clone)]
pub struct DressingParams<T> {
    /// Ω, rad/µs.
    pub rabi_frequency: T,
    /// Δ, rad/µs. Positive Δ gives ferromagnetic (J < 0) interactions.
    pub detuning: T,
    /// Δ_F, rad/µs.
    pub forster_defect: T,
    /// C3, rad·µm³/µs.
    pub c3: T,
    pub angular: AngularFactor<T>,
    /// Soft-core evaluations require |V_R − 2Δ| > guard·|Δ|.
    pub pole_guard: T,
}

impl<T: Real> DressingParams<T> {
    pub fn new(rabi_frequency: T, detuning: T, forster_defect: T, c3: T) -> Result<Self> {
        let p = Self {
            rabi_frequency,
            detuning,
            forster_defect,
            c3,
            angular: AngularFactor::Isotropic,
            pole_guard: T::lit(1e-3),
        };
        p.validate()?;
        Ok(p)
    }

    /// Default operating point: Ω = 2π×1.9 MHz, Δ = 2π×21 MHz, Δ_F = 2π×42 MHz.
    pub fn operating_point() -> Self {
        Self::new(
            T::two_pi() * T::lit(1.9),
            T::two_pi() * T::lit(21.0),
            T::two_pi() * T::lit(DEFAULT_FORSTER_DEFECT_MHZ),
            T::two_pi() * T::lit(DEFAULT_C3_MHZ_UM3),
        )
        .expect("default parameters are valid")
    }

    pub fn with_angular_factor(mut self, angular: AngularFactor<T>) -> Self {
        self.angular = angular;
        self
    }

    pub fn with_rabi_frequency(&self, rabi: T) -> Result<Self> {
        let mut p = self.clone();
        p.rabi_frequency = rabi;
        p.validate()?;
        Ok(p)
    }

    pub fn with_detuning(&self, detuning: T) -> Result<Self> {
        let mut p = self.clone();
        p.detuning = detuning;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: T| v.is_finite();
        if !(finite(self.rabi_frequency) && self.rabi_frequency > T::zero()) {
            return Err(invalid("rabi_frequency", "must be positive and finite"));
        }
        if !(finite(self.detuning) && self.detuning != T::zero()) {
            return Err(invalid("detuning", "must be nonzero and finite"));
        }
        if !(finite(self.forster_defect) && self.forster_defect > T::zero()) {
            return Err(invalid("forster_defect", "must be positive and finite"));
        }
        if !(finite(self.c3) && self.c3 > T::zero()) {
            return Err(invalid("c3", "must be positive and finite"));
        }
        if !(finite(self.pole_guard) && self.pole_guard >= T::zero()) {
            return Err(invalid("pole_guard", "must be nonnegative"));
        }
        Ok(())
    }

    /// Signed blockade plateau J₀ = −Ω⁴/(8Δ³).
    pub fn blockade_plateau(&self) -> T {
        let o2 = self.rabi_frequency * self.rabi_frequency;
        -(o2 * o2) / (T::lit(8.0) * self.detuning.powi(3))
    }

    /// Single-atom light shift Ω²/(4Δ) at leading order.
    pub fn light_shift(&self) -> T {
        self.rabi_frequency * self.rabi_frequency / (T::lit(4.0) * self.detuning)
    }

    /// Resonant dipole coupling c = f(θ)·C3/r³ between the pair channels.
    pub fn channel_coupling(&self, r: T, theta: T) -> Result<T> {
        Ok(self.angular.eval(theta)? * self.c3 / (r * r * r))
    }
}

/// C3 for which |V_R(r_c)| = |Δ| at the given range (isotropic coupling).
///
/// Inverts `c² = |Δ|(|Δ| + Δ_F)`.
pub fn c3_for_range<T: Real>(range: T, detuning: T, forster_defect: T) -> T {
    let d = detuning.abs();
    (d * (d + forster_defect)).sqrt() * range.powi(3)
}

/// Which formula produced a tabulated curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialMethod {
    Exact,
    Softcore,
}

/// J(r) tabulated on strictly increasing radii.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotentialCurve<T> {
    pub radii: Vec<T>,
    pub values: Vec<T>,
    pub method: PotentialMethod,
}

impl<T: Real> PairPotentialCurve<T> {
    pub fn tabulate(
        params: &DressingParams<T>,
        radii: &[T],
        theta: T,
        method: PotentialMethod,
    ) -> Result<Self> {
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("radii", "must be strictly increasing"));
        }
        let values = radii
            .iter()
            .map(|&r| match method {
                PotentialMethod::Exact => dressed_interaction_exact(r, theta, params),
                PotentialMethod::Softcore => dressed_interaction_softcore(r, theta, params),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            radii: radii.to_vec(),
            values,
            method,
        })
    }

    /// Two-column text: r [µm], J/2π [kHz].
    pub fn to_text(&self) -> String {
        let mut out = String::from("# r_um\tJ_over_2pi_khz\n");
        for (r, j) in self.radii.iter().zip(&self.values) {
            out.push_str(&format!(
                "{:.6e}\t{:.9e}\n",
                r.to_f64_lossy(),
                crate::scalar::angular_to_khz(*j).to_f64_lossy()
            ));
        }
        out
    }
}

/// Pair shift V_R(r, θ) of the branch adiabatically connected to |PP⟩:
/// `(Δ_F − sqrt(Δ_F² + 4c²))/2`, evaluated in cancellation-free form.
pub fn forster_pair_energy<T: Real>(r: T, theta: T, params: &DressingParams<T>) -> Result<T> {
    if !(r > T::zero() && r.is_finite()) {
        return Err(Error::Domain(format!(
            "pair distance must be positive, got {}",
            r.to_f64_lossy()
        )));
    }
    let c = params.channel_coupling(r, theta)?;
    let d = params.forster_defect;
    let root = (d * d + T::lit(4.0) * c * c).sqrt();
    if !root.is_finite() {
        // c overflows: resonant-dipole asymptote.
        return Ok(-c.abs());
    }
    Ok(-T::two() * c * c / (d + root))
}

/// Single-atom dressed energy of the branch connected to |↑⟩ for the
/// Hamiltonian [[0, Ω/2], [Ω/2, −Δ]].
pub fn single_atom_energy<T: Real>(params: &DressingParams<T>) -> T {
    let o = params.rabi_frequency;
    let d = params.detuning;
    let root = (d * d + o * o).sqrt();
    o * o / (T::two() * (d + d.signum() * root))
}

/// Pair energy E₂ connected to |↑↑⟩ for a given Rydberg pair shift `v`.
///
/// The branch is followed by adiabatic continuation in `v` from the
/// non-interacting point, picking at each step the eigenvector with the
/// largest overlap with its predecessor. Steps are refined when the overlap
/// test is inconclusive; if refinement cannot resolve the crossing, or the
/// followed state loses its |↑↑⟩ character, the call fails instead of
/// silently switching branches.
pub fn pair_energy_tracked<T: Real>(v_target: T, params: &DressingParams<T>) -> Result<T> {
    let o = params.rabi_frequency;
    let d = params.detuning;
    let g = o / T::lit(2.0).sqrt();
    let matrix = |v: T| -> [[T; 3]; 3] {
        [
            [T::zero(), g, T::zero()],
            [g, -d, g],
            [T::zero(), g, -T::two() * d + v],
        ]
    };
    let overlap = |a: &[T; 3], b: &[T; 3]| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs();

    // Identify the |↑↑⟩-like state in the non-interacting problem.
    let (vals0, vecs0) = symmetric_eigen(matrix(T::zero()));
    let bare = [T::one(), T::zero(), T::zero()];
    let mut idx = 0;
    let mut best = T::zero();
    for k in 0..3 {
        let ov = overlap(&vecs0[k], &bare);
        if ov > best {
            best = ov;
            idx = k;
        }
    }
    if best * best < T::half() {
        return Err(Error::BranchAmbiguity {
            radius: f64::INFINITY,
            detail: "no dressed state has majority |↑↑⟩ character (Ω ≳ |Δ|)".into(),
        });
    }
    let mut vec = vecs0[idx];
    let mut energy = vals0[idx];

    // March in u = asinh(v/|Δ|), which spreads the steps over the many
    // decades that v spans between r = ∞ and the blockade core.
    let scale = d.abs();
    let u_target = (v_target / scale).asinh();
    let base_steps = ((u_target.abs() / T::lit(0.05)).ceil().to_f64_lossy() as usize).max(1);
    let du = u_target / T::from_usize_lossy(base_steps);
    let mut u = T::zero();
    for _ in 0..base_steps {
        let mut stack = vec![(u, u + du, 0u32)];
        while let Some((ua, ub, depth)) = stack.pop() {
            let (vals, vecs) = symmetric_eigen(matrix(scale * ub.sinh()));
            let mut ovs = [T::zero(); 3];
            for k in 0..3 {
                ovs[k] = overlap(&vecs[k], &vec);
            }
            let (mut k1, mut k2) = (0usize, 1usize);
            if ovs[k2] > ovs[k1] {
                std::mem::swap(&mut k1, &mut k2);
            }
            if ovs[2] > ovs[k1] {
                k2 = k1;
                k1 = 2;
            } else if ovs[2] > ovs[k2] {
                k2 = 2;
            }
            let decisive = ovs[k1] * ovs[k1] > T::lit(0.75) && ovs[k2] * ovs[k2] < T::lit(0.25);
            if decisive {
                vec = vecs[k1];
                energy = vals[k1];
            } else if depth < 24 {
                let um = (ua + ub) * T::half();
                stack.push((um, ub, depth + 1));
                stack.push((ua, um, depth + 1));
            } else {
                return Err(Error::BranchAmbiguity {
                    radius: f64::NAN,
                    detail: format!(
                        "overlaps {:.3}/{:.3} at V_R = {:.6e} rad/µs",
                        ovs[k1].to_f64_lossy(),
                        ovs[k2].to_f64_lossy(),
                        (scale * ub.sinh()).to_f64_lossy()
                    ),
                });
            }
        }
        u += du;
    }
    if vec[0] * vec[0] < T::half() {
        return Err(Error::BranchAmbiguity {
            radius: f64::NAN,
            detail: "followed branch lost its |↑↑⟩ character (anti-blockade crossing)".into(),
        });
    }

    // Polish on the secular equation E = g²/(E + Δ − g²/(E + 2Δ − V)),
    // which recovers full relative precision of the small dressed shift.
    let g2 = g * g;
    let mut e = energy;
    for _ in 0..60 {
        let inner = e + T::two() * d - v_target;
        let tail = if inner.is_finite() && inner != T::zero() { g2 / inner } else { T::zero() };
        let den = e + d - tail;
        if den == T::zero() || !den.is_finite() {
            break;
        }
        let next = g2 / den;
        let done = (next - e).abs() <= T::lit(4.0) * T::epsilon() * next.abs();
        e = next;
        if done {
            break;
        }
    }
    // The Jacobi eigenvalue is only good to ~ε·|V| once V dwarfs the other
    // entries, so the polished root may legitimately move by that much.
    let solver_noise = T::lit(64.0) * T::epsilon() * (v_target.abs() + scale);
    if (e - energy).abs() > T::lit(1e-6) * (energy.abs() + g2 / scale) + solver_noise {
        // Polishing drifted to another root; trust the tracked eigenvalue.
        e = energy;
    }
    Ok(e)
}

/// Dressed interaction J(r) = E₂(r) − 2E₁ from exact two-atom diagonalisation.
pub fn dressed_interaction_exact<T: Real>(r: T, theta: T, params: &DressingParams<T>) -> Result<T> {
    let v = forster_pair_energy(r, theta, params)?;
    if v == T::zero() {
        // Separable pair: E₂ = 2E₁ identically.
        return Ok(T::zero());
    }
    let e2 = pair_energy_tracked(v, params).map_err(|e| match e {
        Error::BranchAmbiguity { detail, .. } => Error::BranchAmbiguity {
            radius: r.to_f64_lossy(),
            detail,
        },
        other => other,
    })?;
    Ok(e2 - T::two() * single_atom_energy(params))
}

/// Soft-core dressed interaction `J₀·V_R/(V_R − 2Δ)` with J₀ = −Ω⁴/(8Δ³).
///
/// This is the exact fourth-order result; its blockade limit is the J₀
/// plateau and |J(r_c)| = |J₀|/3 when V_R·Δ < 0.
pub fn dressed_interaction_softcore<T: Real>(
    r: T,
    theta: T,
    params: &DressingParams<T>,
) -> Result<T> {
    let v = forster_pair_energy(r, theta, params)?;
    softcore_from_shift(v, params)
}

/// Soft-core formula for an explicit pair shift.
pub fn softcore_from_shift<T: Real>(v: T, params: &DressingParams<T>) -> Result<T> {
    Ok(params.blockade_plateau() * softcore_shape(v, params)?)
}

/// Dimensionless soft-core profile `V_R/(V_R − 2Δ)`, guarded at the pole.
pub fn softcore_shape<T: Real>(v: T, params: &DressingParams<T>) -> Result<T> {
    let d = params.detuning;
    let den = v - T::two() * d;
    if den.abs() <= params.pole_guard * d.abs() {
        return Err(Error::Resonance {
            distance: den.abs().to_f64_lossy(),
        });
    }
    if !v.is_finite() {
        return Ok(T::one());
    }
    Ok(v / den)
}

/// Characteristic range r_c where |V_R(r_c, θ)| = |Δ|, by bracketed bisection.
pub fn interaction_range<T: Real>(params: &DressingParams<T>, theta: T) -> Result<T> {
    let target = params.detuning.abs();
    let no_range = || Error::NoRange {
        detuning: target.to_f64_lossy(),
    };
    if params.angular.eval(theta)? == T::zero() {
        return Err(no_range());
    }
    let excess = |r: T| -> Result<T> { Ok(forster_pair_energy(r, theta, params)?.abs() - target) };
    let mut hi = T::one();
    let mut guard = 0;
    while excess(hi)? > T::zero() {
        hi *= T::two();
        guard += 1;
        if guard > 200 {
            return Err(no_range());
        }
    }
    let mut lo = hi;
    guard = 0;
    while excess(lo)? <= T::zero() {
        lo *= T::half();
        guard += 1;
        if guard > 200 {
            return Err(no_range());
        }
    }
    bisect(excess, lo, hi, T::lit(1e-12).max(T::epsilon() * T::lit(8.0)))
}

/// J(r, θ) provider used by ensemble integrals and coupling assembly.
pub trait PairInteraction<T: Real>: Sync {
    fn coupling(&self, r: T, theta: T) -> Result<T>;
    /// Length scale beyond which the interaction falls off (µm).
    fn range_hint(&self) -> T;
}

/// Soft-core J(r) for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct SoftCore<T> {
    pub params: DressingParams<T>,
}

impl<T: Real> PairInteraction<T> for SoftCore<T> {
    fn coupling(&self, r: T, theta: T) -> Result<T> {
        dressed_interaction_softcore(r, theta, &self.params)
    }

    fn range_hint(&self) -> T {
        interaction_range(&self.params, T::zero()).unwrap_or(T::one())
    }
}

/// Exact-diagonalisation J(r) for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct ExactDressing<T> {
    pub params: DressingParams<T>,
}

impl<T: Real> PairInteraction<T> for ExactDressing<T> {
    fn coupling(&self, r: T, theta: T) -> Result<T> {
        dressed_interaction_exact(r, theta, &self.params)
    }

    fn range_hint(&self) -> T {
        interaction_range(&self.params, T::zero()).unwrap_or(T::one())
    }
}
