//! Atom clouds, the dressing-beam profile, pairwise couplings and
//! ensemble-averaged interaction quantities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{adaptive_simpson, gauss_legendre};
use crate::pair_potential::{forster_pair_energy, softcore_shape, DressingParams, PairInteraction};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Closest allowed pair separation in a coupling matrix (µm).
pub const MIN_PAIR_DISTANCE_UM: f64 = 1e-3;

/// Mean interparticle spacing below which a cloud is rejected (µm).
pub const MIN_MEAN_SPACING_UM: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry<T> {
    /// Uniform density in a box centred on the origin; edge lengths in µm.
    Box { lengths: [T; 3] },
    /// Gaussian density profile with peak density at the origin; rms widths in µm.
    GaussianEllipsoid { sigmas: [T; 3] },
}

impl<T: Real> Geometry<T> {
    /// Cube holding `count` atoms at density `density`.
    pub fn cube_for(count: usize, density: T) -> Self {
        let side = (T::from_usize_lossy(count) / density).cbrt();
        Geometry::Box {
            lengths: [side; 3],
        }
    }

    /// Effective volume V with ⟨N⟩ = ρ·V for peak density ρ.
    pub fn effective_volume(&self) -> T {
        match self {
            Geometry::Box { lengths } => lengths[0] * lengths[1] * lengths[2],
            Geometry::GaussianEllipsoid { sigmas } => {
                (T::two_pi()).powf(T::lit(1.5)) * sigmas[0] * sigmas[1] * sigmas[2]
            }
        }
    }

    pub fn expected_count(&self, density: T) -> T {
        density * self.effective_volume()
    }

    fn validate(&self) -> Result<()> {
        let dims = match self {
            Geometry::Box { lengths } => lengths,
            Geometry::GaussianEllipsoid { sigmas } => sigmas,
        };
        if dims.iter().any(|d| !(d.is_finite() && *d > T::zero())) {
            return Err(invalid("geometry", "dimensions must be positive and finite"));
        }
        Ok(())
    }
}

/// Frozen sample of atom positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCloud<T> {
    pub positions: Vec<Vec3<T>>,
    /// Peak density ρ in atoms/µm³.
    pub peak_density: T,
    /// Metadata only; atoms do not move.
    pub temperature_uk: Option<T>,
    pub rng_seed: u64,
    pub geometry: Geometry<T>,
}

impl<T: Real> AtomCloud<T> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Builds a cloud from explicit positions (e.g. a snapshot).
    pub fn from_positions(positions: Vec<Vec3<T>>, peak_density: T, geometry: Geometry<T>) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("positions", "a cloud holds at least one atom"));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(invalid("positions", "positions must be finite"));
        }
        Ok(Self {
            positions,
            peak_density,
            temperature_uk: None,
            rng_seed: 0,
            geometry,
        })
    }

    /// Atom indices falling in each bin `[edges[k], edges[k+1])` along `axis`.
    pub fn bin_along_axis(&self, axis: usize, edges: &[T]) -> Vec<Vec<usize>> {
        let mut bins = vec![Vec::new(); edges.len().saturating_sub(1)];
        for (i, p) in self.positions.iter().enumerate() {
            let x = p[axis];
            if let Some(k) = edges.windows(2).position(|w| x >= w[0] && x < w[1]) {
                bins[k].push(i);
            }
        }
        bins
    }

    /// Text snapshot: `id x y z omega_local` per line.
    pub fn to_text(&self, beam: Option<&BeamProfile<T>>) -> String {
        let mut out = String::from("# id\tx_um\ty_um\tz_um\tomega_local_rad_per_us\n");
        for (i, p) in self.positions.iter().enumerate() {
            let omega = beam.map_or(T::zero(), |b| b.rabi_at(p));
            out.push_str(&format!(
                "{i}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\n",
                p.x.to_f64_lossy(),
                p.y.to_f64_lossy(),
                p.z.to_f64_lossy(),
                omega.to_f64_lossy()
            ));
        }
        out
    }

    /// Parses a snapshot written by [`AtomCloud::to_text`]; the Ω column is ignored.
    pub fn parse_positions(text: &str) -> Result<Vec<Vec3<T>>> {
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() < 4 {
                return Err(invalid("snapshot", format!("line {}: expected id x y z", lineno + 1)));
            }
            let parse = |s: &str| -> Result<T> {
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| invalid("snapshot", format!("line {}: {e}", lineno + 1)))
            };
            out.push(Vec3::new(parse(cols[1])?, parse(cols[2])?, parse(cols[3])?));
        }
        Ok(out)
    }
}

/// Samples a frozen cloud. With `count = None` the atom number is drawn from
/// a Poisson distribution with mean ρ·V; otherwise exactly `count` atoms are
/// placed and the count must be statistically consistent with ρ·V.
pub fn sample_cloud<T: Real>(
    geometry: Geometry<T>,
    density: T,
    count: Option<usize>,
    seed: u64,
) -> Result<AtomCloud<T>> {
    geometry.validate()?;
    if !(density.is_finite() && density > T::zero()) {
        return Err(invalid("density", "must be positive"));
    }
    let expected = geometry.expected_count(density).to_f64_lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = match count {
        Some(0) => return Err(invalid("count", "a cloud holds at least one atom")),
        Some(n) => {
            let tol = 5.0 * expected.sqrt() + 1.0;
            if (n as f64 - expected).abs() > tol {
                return Err(Error::Density(format!(
                    "{n} atoms inconsistent with ρ·V = {expected:.3}"
                )));
            }
            n
        }
        None => {
            let poisson = Poisson::new(expected)
                .map_err(|e| Error::Density(format!("cannot draw atom number: {e}")))?;
            (poisson.sample(&mut rng) as usize).max(1)
        }
    };
    let effective_density = n as f64 / geometry.effective_volume().to_f64_lossy();
    let spacing = effective_density.max(density.to_f64_lossy()).powf(-1.0 / 3.0);
    if spacing < MIN_MEAN_SPACING_UM {
        return Err(Error::Density(format!(
            "mean spacing {spacing:.3e} µm below {MIN_MEAN_SPACING_UM} µm"
        )));
    }
    let positions = (0..n)
        .map(|_| match geometry {
            Geometry::Box { lengths } => {
                let mut c = [T::zero(); 3];
                for k in 0..3 {
                    let u: f64 = rng.random::<f64>() - 0.5;
                    c[k] = T::lit(u) * lengths[k];
                }
                Vec3::from_array(c)
            }
            Geometry::GaussianEllipsoid { sigmas } => {
                let mut c = [T::zero(); 3];
                for k in 0..3 {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    c[k] = T::lit(g) * sigmas[k];
                }
                Vec3::from_array(c)
            }
        })
        .collect();
    Ok(AtomCloud {
        positions,
        peak_density: density,
        temperature_uk: None,
        rng_seed: seed,
        geometry,
    })
}

/// Gaussian dressing beam, Ω(x) = Ω₀·exp(−(x − x₀)²/w²) along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile<T> {
    pub peak_rabi: T,
    pub waist: T,
    pub center: T,
    /// Cloud axis the beam profile varies along (0 = x).
    pub axis: usize,
}

impl<T: Real> BeamProfile<T> {
    pub fn new(peak_rabi: T, waist: T, center: T) -> Result<Self> {
        if !(peak_rabi > T::zero() && peak_rabi.is_finite()) {
            return Err(invalid("peak_rabi", "must be positive"));
        }
        if !(waist > T::zero() && waist.is_finite()) {
            return Err(invalid("waist", "must be positive"));
        }
        Ok(Self {
            peak_rabi,
            waist,
            center,
            axis: 0,
        })
    }

    /// Flat-top beam: every atom sees Ω₀.
    pub fn uniform(peak_rabi: T) -> Result<Self> {
        Self::new(peak_rabi, T::infinity(), T::zero()).or_else(|_| {
            Ok(Self {
                peak_rabi,
                waist: T::infinity(),
                center: T::zero(),
                axis: 0,
            })
        })
    }

    pub fn rabi_at_coordinate(&self, x: T) -> T {
        if self.waist.is_infinite() {
            return self.peak_rabi;
        }
        let u = (x - self.center) / self.waist;
        self.peak_rabi * (-u * u).exp()
    }

    pub fn rabi_at(&self, p: &Vec3<T>) -> T {
        self.rabi_at_coordinate(p[self.axis])
    }

    /// Offset from the beam centre at which Ω drops to `rabi` (≤ Ω₀).
    pub fn offset_for_rabi(&self, rabi: T) -> Option<T> {
        if !(rabi > T::zero() && rabi <= self.peak_rabi) || self.waist.is_infinite() {
            return None;
        }
        Some(self.waist * (self.peak_rabi / rabi).ln().sqrt())
    }
}

/// How pair separations are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary<T> {
    Open,
    /// Sum over periodic images of a box cloud out to `cutoff` µm.
    Periodic { cutoff: T },
}

/// Symmetric Ising coupling matrix with zero diagonal and per-atom light shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix<T> {
    n: usize,
    values: Vec<T>,
    pub light_shifts: Vec<T>,
}

impl<T: Real> CouplingMatrix<T> {
    /// Builds from a dense row-major matrix, checking every structural invariant.
    pub fn from_dense(n: usize, values: Vec<T>, light_shifts: Vec<T>) -> Result<Self> {
        if values.len() != n * n || light_shifts.len() != n {
            return Err(invalid("couplings", "dimension mismatch"));
        }
        let m = Self {
            n,
            values,
            light_shifts,
        };
        m.validate()?;
        Ok(m)
    }

    /// All-to-all uniform couplings `j` with no light shift.
    pub fn uniform(n: usize, j: T) -> Self {
        let mut values = vec![j; n * n];
        for i in 0..n {
            values[i * n + i] = T::zero();
        }
        Self {
            n,
            values,
            light_shifts: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).iter().fold(T::zero(), |a, &v| a + v)
    }

    /// Per-atom mean-field twisting rate χ_i = −½ Σ_j J_ij.
    pub fn chi_per_atom(&self) -> Vec<T> {
        (0..self.n).map(|i| -T::half() * self.row_sum(i)).collect()
    }

    /// Ensemble mean of χ_i.
    pub fn mean_chi(&self) -> T {
        if self.n == 0 {
            return T::zero();
        }
        self.chi_per_atom().iter().fold(T::zero(), |a, &v| a + v) / T::from_usize_lossy(self.n)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|&v| v * factor).collect(),
            light_shifts: self.light_shifts.clone(),
        }
    }

    pub fn with_light_shifts(mut self, shifts: Vec<T>) -> Result<Self> {
        if shifts.len() != self.n {
            return Err(invalid("light_shifts", "dimension mismatch"));
        }
        self.light_shifts = shifts;
        Ok(self)
    }

    pub fn without_light_shifts(&self) -> Self {
        let mut m = self.clone();
        m.light_shifts = vec![T::zero(); self.n];
        m
    }

    /// Symmetry, zero diagonal and a single coupling sign.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let (mut pos, mut neg) = (false, false);
        for i in 0..n {
            if self.get(i, i) != T::zero() {
                return Err(invalid("couplings", format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let a = self.get(i, j);
                if a != self.get(j, i) {
                    return Err(invalid("couplings", format!("asymmetric at ({i}, {j})")));
                }
                if !a.is_finite() {
                    return Err(invalid("couplings", format!("non-finite at ({i}, {j})")));
                }
                pos |= a > T::zero();
                neg |= a < T::zero();
            }
        }
        if pos && neg {
            return Err(invalid("couplings", "mixed ferro- and antiferromagnetic signs"));
        }
        if self.light_shifts.iter().any(|d| !d.is_finite()) {
            return Err(invalid("light_shifts", "must be finite"));
        }
        Ok(())
    }
}

/// Pairwise couplings J_ij for a frozen cloud under a local dressing beam.
///
/// Each pair uses the soft-core potential with the geometric-mean local Rabi
/// frequency, so J_ij ∝ Ω_i²Ω_j²; light shifts are δ_i = Ω_i²/(4Δ).
pub fn coupling_matrix<T: Real>(
    cloud: &AtomCloud<T>,
    beam: &BeamProfile<T>,
    params: &DressingParams<T>,
    boundary: Boundary<T>,
) -> Result<CouplingMatrix<T>> {
    let n = cloud.len();
    let rabi: Vec<T> = cloud.positions.iter().map(|p| beam.rabi_at(p)).collect();
    let detuning = params.detuning;
    let light_shifts: Vec<T> = rabi
        .iter()
        .map(|&o| o * o / (T::lit(4.0) * detuning))
        .collect();

    let images: Vec<Vec3<T>> = match (boundary, cloud.geometry) {
        (Boundary::Open, _) => vec![Vec3::zero()],
        (Boundary::Periodic { cutoff }, Geometry::Box { lengths }) => {
            if !(cutoff > T::zero()) {
                return Err(invalid("cutoff", "must be positive"));
            }
            let reach = |l: T| (cutoff / l).ceil().to_f64_lossy() as i64 + 1;
            let (mx, my, mz) = (reach(lengths[0]), reach(lengths[1]), reach(lengths[2]));
            let mut v = Vec::new();
            for a in -mx..=mx {
                for b in -my..=my {
                    for c in -mz..=mz {
                        v.push(Vec3::new(
                            T::lit(a as f64) * lengths[0],
                            T::lit(b as f64) * lengths[1],
                            T::lit(c as f64) * lengths[2],
                        ));
                    }
                }
            }
            v
        }
        (Boundary::Periodic { .. }, _) => {
            return Err(invalid("boundary", "periodic images require a box geometry"));
        }
    };
    let cutoff = match boundary {
        Boundary::Open => T::infinity(),
        Boundary::Periodic { cutoff } => cutoff,
    };
    let min_dist = T::lit(MIN_PAIR_DISTANCE_UM);
    let eighth_cubed = T::lit(8.0) * detuning * detuning * detuning;

    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    let d = cloud.positions[j] - cloud.positions[i];
                    let mut shape_sum = T::zero();
                    for img in &images {
                        let sep = d + *img;
                        let r = sep.norm();
                        if r > cutoff {
                            continue;
                        }
                        if r < min_dist {
                            return Err(Error::Geometry {
                                i,
                                j,
                                distance: r.to_f64_lossy(),
                            });
                        }
                        let theta = (sep.z.abs() / r).min(T::one()).acos();
                        let v = forster_pair_energy(r, theta, params)?;
                        shape_sum += softcore_shape(v, params)?;
                    }
                    let o2 = rabi[i] * rabi[j];
                    Ok(-(o2 * o2) / eighth_cubed * shape_sum)
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = vec![T::zero(); n * n];
    for (i, row) in upper.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let j = i + 1 + k;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    CouplingMatrix::from_dense(n, values, light_shifts)
}

/// Beyond this many range hints both integrators continue J(r) as r⁻⁶ from
/// its value there; E₂ − 2E₁ loses all relative precision far out in the tail.
const TAIL_START: f64 = 6.0;

/// Mean-field shift estimates from the two independent integration routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate<T> {
    /// χ_th from radial (and angular) quadrature, rad/µs.
    pub quadrature: T,
    /// χ_th from Monte Carlo over sampled pair separations, rad/µs.
    pub monte_carlo: T,
    pub monte_carlo_stderr: T,
}

/// ∫ J(r) d³r by quadrature in u = (r/s)³, so that d³r = (4π s³/3) du over
/// the solid-angle average; the r⁻⁶ tail past `TAIL_START` is added in closed form.
pub fn volume_integral_quadrature<T: Real, P: PairInteraction<T> + ?Sized>(
    interaction: &P,
    isotropic: bool,
) -> Result<T> {
    let s = interaction.range_hint();
    let s3 = s * s * s;
    let wrap = |e: Error| match e {
        Error::Integration(m) => Error::Integration(m),
        other => Error::Integration(other.to_string()),
    };
    let radial = |theta: T| -> Result<T> {
        let u_tail = T::lit(TAIL_START * TAIL_START * TAIL_START);
        let j_tail = interaction.coupling(s * T::lit(TAIL_START), theta)?;
        let integrand = |u: T| interaction.coupling((s * u.cbrt()).max(s * T::lit(1e-6)), theta);
        let scale = interaction
            .coupling(s, theta)?
            .abs()
            .max(interaction.coupling(s * T::half(), theta)?.abs())
            .max(T::min_positive_value());
        let core = adaptive_simpson(integrand, T::zero(), u_tail, scale * T::lit(1e-9), 40).map_err(wrap)?;
        // ∫_{u_tail}^∞ j_tail·(u_tail/u)² du
        let v = core + j_tail * u_tail;
        Ok(v * s3 / T::lit(3.0))
    };
    if isotropic {
        return Ok(T::lit(4.0) * T::PI() * radial(T::zero())?);
    }
    let (mu, w) = gauss_legendre::<T>(48);
    let mut total = T::zero();
    for (&m, &wk) in mu.iter().zip(&w) {
        total += wk * radial(m.acos()).map_err(wrap)?;
    }
    Ok(T::two_pi() * total)
}

/// ∫ J(r) d³r by importance-sampled Monte Carlo over pair separations.
///
/// Separations are drawn with radial density ∝ r²/(1 + (r/s)⁶) (inverse CDF
/// r = s·tan(πu/2)^{1/3}) and isotropic directions.
pub fn volume_integral_monte_carlo<T: Real, P: PairInteraction<T> + ?Sized>(
    interaction: &P,
    samples: usize,
    seed: u64,
) -> Result<(T, T)> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let s = interaction.range_hint().to_f64_lossy();
    let norm = 4.0 * std::f64::consts::PI * s.powi(3) / 3.0 * std::f64::consts::FRAC_PI_2;
    let x_tail = TAIL_START.powi(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let u: f64 = rng.random::<f64>();
        let x = (std::f64::consts::FRAC_PI_2 * u).tan();
        if x <= 0.0 || !x.is_finite() {
            continue;
        }
        let r = s * x.cbrt();
        let mu: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let theta = T::lit(mu.acos());
        let j = if x > x_tail {
            interaction.coupling(T::lit(s * TAIL_START), theta)?.to_f64_lossy() * (x_tail / x).powi(2)
        } else {
            interaction.coupling(T::lit(r), theta)?.to_f64_lossy()
        };
        let val = j * (1.0 + x * x) * norm;
        if !val.is_finite() {
            return Err(Error::Integration(format!("non-finite Monte Carlo weight at r = {r}")));
        }
        sum += val;
        sum2 += val * val;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    Ok((T::lit(mean), T::lit((var / (n - 1.0)).sqrt())))
}

/// Predicted mean-field shift χ_th = −(ρ/2)∫J(r) d³r, computed by quadrature
/// and by Monte Carlo. The two routes must agree within 2% (checked when the
/// Monte Carlo error bar is small enough to make the comparison meaningful).
pub fn meanfield_chi<T: Real, P: PairInteraction<T> + ?Sized>(
    density: T,
    interaction: &P,
    isotropic: bool,
    mc_samples: usize,
    seed: u64,
) -> Result<ChiEstimate<T>> {
    if !(density >= T::zero() && density.is_finite()) {
        return Err(invalid("density", "must be nonnegative"));
    }
    let q = volume_integral_quadrature(interaction, isotropic)?;
    let (m, m_err) = volume_integral_monte_carlo(interaction, mc_samples, seed)?;
    let factor = -density * T::half();
    let est = ChiEstimate {
        quadrature: factor * q,
        monte_carlo: factor * m,
        monte_carlo_stderr: density * T::half() * m_err,
    };
    let scale = q.abs().max(T::min_positive_value());
    if (q - m).abs() > T::lit(0.02) * scale && m_err < T::lit(0.005) * scale {
        return Err(Error::Integration(format!(
            "quadrature {} and Monte Carlo {} disagree by more than 2%",
            q.to_f64_lossy(),
            m.to_f64_lossy()
        )));
    }
    Ok(est)
}

/// Expected atom number N_c = ρ·(4/3)π·r_c³ inside one interaction sphere.
pub fn interaction_sphere_count<T: Real>(density: T, range: T) -> Result<T> {
    if !(density >= T::zero() && range >= T::zero()) {
        return Err(Error::Domain("density and range must be nonnegative".into()));
    }
    Ok(density * T::lit(4.0 / 3.0) * T::PI() * range * range * range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair_potential::{dressed_interaction_softcore, SoftCore};

    #[test]
    fn expected_count_in_box() {
        let g = Geometry::Box { lengths: [10.0_f64; 3] };
        assert!((g.expected_count(0.14) - 140.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = Geometry::Box { lengths: [10.0_f64; 3] };
        let a = sample_cloud(g, 0.14, Some(140), 7).unwrap();
        let b = sample_cloud(g, 0.14, Some(140), 7).unwrap();
        assert_eq!(a.positions, b.positions);
        let c = sample_cloud(g, 0.14, Some(140), 8).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn density_errors() {
        let g = Geometry::Box { lengths: [1.0_f64; 3] };
        assert!(matches!(sample_cloud(g, 1e7, None, 1), Err(Error::Density(_))));
        let g = Geometry::Box { lengths: [10.0_f64; 3] };
        assert!(matches!(sample_cloud(g, 0.14, Some(1000), 1), Err(Error::Density(_))));
        assert!(sample_cloud(g, 0.0, None, 1).is_err());
    }

    #[test]
    fn single_atom_has_empty_couplings() {
        let p = DressingParams::<f64>::operating_point();
        let cloud = AtomCloud::from_positions(vec![Vec3::zero()], 0.14, Geometry::Box { lengths: [1.0; 3] }).unwrap();
        let beam = BeamProfile::uniform(p.rabi_frequency).unwrap();
        let m = coupling_matrix(&cloud, &beam, &p, Boundary::Open).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn close_pair_hits_plateau() {
        let p = DressingParams::<f64>::operating_point();
        let g = Geometry::Box { lengths: [10.0; 3] };
        let cloud = AtomCloud::from_positions(vec![Vec3::zero(), Vec3::new(0.0, 0.0, 0.05)], 0.14, g).unwrap();
        let beam = BeamProfile::uniform(p.rabi_frequency).unwrap();
        let m = coupling_matrix(&cloud, &beam, &p, Boundary::Open).unwrap();
        let j0 = p.blockade_plateau();
        assert!(((m.get(0, 1) - j0) / j0).abs() < 0.01);
        assert!((m.light_shifts[0] - p.light_shift()).abs() < 1e-15);
    }

    #[test]
    fn undressed_atom_decouples() {
        let p = DressingParams::<f64>::operating_point();
        let g = Geometry::Box { lengths: [1000.0; 3] };
        let cloud = AtomCloud::from_positions(vec![Vec3::zero(), Vec3::new(400.0, 0.0, 1.0)], 0.14, g).unwrap();
        let beam = BeamProfile::new(p.rabi_frequency, 80.0, 0.0).unwrap();
        let m = coupling_matrix(&cloud, &beam, &p, Boundary::Open).unwrap();
        assert!(m.get(0, 1).abs() < 1e-6 * p.blockade_plateau().abs());
        assert!(m.light_shifts[1].abs() < 1e-6 * m.light_shifts[0].abs());
    }

    #[test]
    fn three_atoms_match_pairwise_evaluation() {
        let p = DressingParams::<f64>::operating_point();
        let g = Geometry::Box { lengths: [20.0; 3] };
        let pts = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.0, 4.0, 2.0)];
        let cloud = AtomCloud::from_positions(pts.clone(), 0.14, g).unwrap();
        let beam = BeamProfile::uniform(p.rabi_frequency).unwrap();
        let m = coupling_matrix(&cloud, &beam, &p, Boundary::Open).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let d = pts[j] - pts[i];
                let r = d.norm();
                let theta = (d.z.abs() / r).acos();
                let oracle = dressed_interaction_softcore(r, theta, &p).unwrap();
                assert!(((m.get(i, j) - oracle) / oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coincident_atoms_rejected() {
        let p = DressingParams::<f64>::operating_point();
        let g = Geometry::Box { lengths: [20.0; 3] };
        let cloud = AtomCloud::from_positions(vec![Vec3::zero(), Vec3::new(1e-4, 0.0, 0.0)], 0.14, g).unwrap();
        let beam = BeamProfile::uniform(p.rabi_frequency).unwrap();
        assert!(matches!(
            coupling_matrix(&cloud, &beam, &p, Boundary::Open),
            Err(Error::Geometry { .. })
        ));
    }

    #[test]
    fn sphere_count() {
        let n = interaction_sphere_count(0.14_f64, 5.0).unwrap();
        assert!((n - 73.303).abs() < 1e-2);
        assert_eq!(interaction_sphere_count(0.14_f64, 0.0).unwrap(), 0.0);
        let a = interaction_sphere_count(0.2_f64, 1.3).unwrap();
        let b = interaction_sphere_count(0.2_f64, 2.6).unwrap();
        assert!((b / a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn chi_linear_in_density() {
        let sc = SoftCore { params: DressingParams::<f64>::operating_point() };
        let a = meanfield_chi(0.14, &sc, true, 20_000, 3).unwrap();
        let b = meanfield_chi(0.28, &sc, true, 20_000, 3).unwrap();
        assert!((b.quadrature / a.quadrature - 2.0).abs() < 1e-12);
    }

    #[test]
    fn snapshot_roundtrip() {
        let g = Geometry::Box { lengths: [10.0_f64; 3] };
        let cloud = sample_cloud(g, 0.14, Some(140), 11).unwrap();
        let text = cloud.to_text(None);
        let back = AtomCloud::<f64>::parse_positions(&text).unwrap();
        for (a, b) in cloud.positions.iter().zip(&back) {
            assert!(a.distance(b) < 1e-10);
        }
    }
}
