//! Effective transverse-field Ising model: fixed points of the static
//! mean-field flow and of the stroboscopic map, their stability, and
//! critical positions across a spatially varying interaction strength.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::spin_engine::CollectiveMap;
use crate::vec3::{Mat3, Vec3};

/// Elliptic fixed points have tangent-map eigenvalues on the unit circle;
/// anything within this band counts as stable.
pub const STABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetParams<T> {
    /// Mean-field twisting rate χ (rad/µs).
    pub chi: T,
    pub tau_r: T,
    /// Transverse field h (rad/µs).
    pub h: T,
    pub tau_x: T,
    pub contrast: T,
}

impl<T: Real> FloquetParams<T> {
    pub fn new(chi: T, tau_r: T, h: T, tau_x: T, contrast: T) -> Result<Self> {
        let p = Self {
            chi,
            tau_r,
            h,
            tau_x,
            contrast,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_r >= T::zero() && self.tau_x >= T::zero()) {
            return Err(invalid("tau", "τ_R and τ_X must be ≥ 0"));
        }
        if !(self.contrast >= T::zero() && self.contrast <= T::one()) {
            return Err(invalid("contrast", "must lie in [0, 1]"));
        }
        if !(self.chi.is_finite() && self.h.is_finite()) {
            return Err(invalid("chi", "χ and h must be finite"));
        }
        Ok(())
    }

    pub fn twist_angle(&self) -> T {
        self.chi * self.tau_r
    }

    pub fn rotation_angle(&self) -> T {
        self.h * self.tau_x
    }

    /// Λ = χτ_R/(hτ_X).
    pub fn lambda(&self) -> T {
        self.twist_angle() / self.rotation_angle()
    }

    /// Λ_eff = CΛ.
    pub fn lambda_eff(&self) -> T {
        self.contrast * self.lambda()
    }

    pub fn collective_map(&self) -> CollectiveMap<T> {
        CollectiveMap::new(self.twist_angle(), self.rotation_angle(), self.contrast)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint<T> {
    pub direction: Vec3<T>,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet<T> {
    pub points: Vec<FixedPoint<T>>,
    /// The map has a continuum of fixed points (pure twist); `points` then
    /// lists only representatives.
    pub degenerate: bool,
}

impl<T: Real> FixedPointSet<T> {
    pub fn stable(&self) -> impl Iterator<Item = &FixedPoint<T>> {
        self.points.iter().filter(|p| p.stability == Stability::Stable)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fixed points of H_MF ∝ −Λ_eff s_z²/2 − s_x on the +x̂ side of the sphere.
pub fn fixed_points<T: Real>(lambda_eff: T) -> FixedPointSet<T> {
    let x_axis = Vec3::unit_x();
    if !(lambda_eff > T::one()) {
        return FixedPointSet {
            points: vec![FixedPoint {
                direction: x_axis,
                stability: Stability::Stable,
            }],
            degenerate: false,
        };
    }
    let sx = T::one() / lambda_eff;
    let sz = (T::one() - sx * sx).sqrt();
    FixedPointSet {
        points: vec![
            FixedPoint {
                direction: Vec3::new(sx, T::zero(), sz),
                stability: Stability::Stable,
            },
            FixedPoint {
                direction: Vec3::new(sx, T::zero(), -sz),
                stability: Stability::Stable,
            },
            FixedPoint {
                direction: x_axis,
                stability: Stability::Unstable,
            },
        ],
        degenerate: false,
    }
}

/// A one-cycle map of the unit sphere with its Jacobian.
pub trait StroboscopicMap<T: Real> {
    fn apply(&self, s: &Vec3<T>) -> Vec3<T>;
    fn jacobian(&self, s: &Vec3<T>) -> Mat3<T>;
    /// Scalar whose zeros on the meridian s = (cos ψ, 0, sin ψ) are the
    /// map's meridian fixed points.
    fn meridian_condition(&self, psi: T) -> T;
    /// True when the map fixes a continuum of points.
    fn is_degenerate(&self) -> bool;
}

impl<T: Real> StroboscopicMap<T> for CollectiveMap<T> {
    fn apply(&self, s: &Vec3<T>) -> Vec3<T> {
        CollectiveMap::apply(self, s)
    }

    fn jacobian(&self, s: &Vec3<T>) -> Mat3<T> {
        let a = self.half_twist();
        // d/ds [R_z(a s_z) s] = R_z(a s_z) + (ẑ × T(s)) (a ẑ)ᵀ
        let twist_jac = |v: &Vec3<T>| -> (Vec3<T>, Mat3<T>) {
            let out = v.rotated_z(a * v.z);
            let j = Mat3::rotation_z(a * v.z).add(&Mat3::outer(&Vec3::unit_z().cross(&out), &(Vec3::unit_z() * a)));
            (out, j)
        };
        let (t1, j1) = twist_jac(s);
        let rx = Mat3::rotation_x(self.rotation);
        let r = rx.apply(&t1);
        let (_, j2) = twist_jac(&r);
        j2.matmul(&rx).matmul(&j1)
    }

    /// cos ψ · sin(a sin ψ) − sin ψ · tan(β/2), with a = κC/2.
    fn meridian_condition(&self, psi: T) -> T {
        let (sp, cp) = psi.sin_cos();
        cp * (self.half_twist() * sp).sin() - sp * (self.rotation * T::half()).tan()
    }

    fn is_degenerate(&self) -> bool {
        self.rotation == T::zero()
    }
}

/// |map(s) − s|.
pub fn residual<T: Real, M: StroboscopicMap<T> + ?Sized>(map: &M, s: &Vec3<T>) -> T {
    map.apply(s).distance(s)
}

/// Numerical fixed points of a stroboscopic map on the +x̂ half of the φ = 0
/// meridian, each classified by [`stability`].
///
/// Roots of the meridian condition are bracketed on a grid, refined by
/// bisection and then polished by damped Newton steps on the full map.
pub fn map_fixed_points<T: Real, M: StroboscopicMap<T> + ?Sized>(map: &M) -> Result<FixedPointSet<T>> {
    let tol = T::lit(1e-8).max(T::lit(64.0) * T::epsilon());
    if map.is_degenerate() {
        // Pure twist: every point with sin(a s_z) = 0 is fixed, including the
        // whole equator and both poles.
        let reps = [Vec3::unit_x(), Vec3::unit_z(), -Vec3::unit_z()];
        return Ok(FixedPointSet {
            points: reps
                .iter()
                .map(|&d| FixedPoint {
                    direction: d,
                    stability: Stability::Stable,
                })
                .collect(),
            degenerate: true,
        });
    }
    let grid = 4000usize;
    let half_pi = T::FRAC_PI_2();
    let psi_at = |k: usize| -half_pi + T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(grid);
    let mut roots: Vec<T> = Vec::new();
    let mut prev_psi = psi_at(0);
    let mut prev = map.meridian_condition(prev_psi);
    for k in 1..=grid {
        let psi = psi_at(k);
        let val = map.meridian_condition(psi);
        if val == T::zero() {
            roots.push(psi);
        } else if prev != T::zero() && (val > T::zero()) != (prev > T::zero()) {
            roots.push(refine(|p| map.meridian_condition(p), prev_psi, psi));
        }
        prev = val;
        prev_psi = psi;
    }
    // ψ = 0 is always a root; make sure it is reported exactly once.
    roots.retain(|r| r.abs() > T::lit(1e-9));
    roots.push(T::zero());
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let mut points = Vec::with_capacity(roots.len());
    for psi in roots {
        let (sp, cp) = psi.sin_cos();
        let mut s = Vec3::new(cp, T::zero(), sp);
        s = polish(map, s);
        let res = residual(map, &s);
        if !(res < tol) {
            return Err(Error::Search {
                residual: res.to_f64_lossy(),
            });
        }
        points.push(FixedPoint {
            direction: s,
            stability: stability(map, &s)?,
        });
    }
    // Order as in `fixed_points`: stable first, the x̂ point last.
    points.sort_by_key(|p| (p.stability == Stability::Unstable, p.direction.z < T::zero()));
    Ok(FixedPointSet {
        points,
        degenerate: false,
    })
}

fn refine<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return mid;
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::half()
}

/// Damped Newton on F(s) = map(s) − s restricted to the tangent plane.
fn polish<T: Real, M: StroboscopicMap<T> + ?Sized>(map: &M, mut s: Vec3<T>) -> Vec3<T> {
    for _ in 0..50 {
        let r0 = residual(map, &s);
        if r0 < T::lit(1e-14) {
            break;
        }
        let (e1, e2) = tangent_basis(&s);
        let j = map.jacobian(&s);
        let f = map.apply(&s) - s;
        // (Jᵀ − I) restricted: A_ab = e_a·(J − I)e_b
        let col = |e: &Vec3<T>| j.apply(e) - *e;
        let (c1, c2) = (col(&e1), col(&e2));
        let a = [[e1.dot(&c1), e1.dot(&c2)], [e2.dot(&c1), e2.dot(&c2)]];
        let rhs = [-e1.dot(&f), -e2.dot(&f)];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() < T::lit(1e-300).max(T::min_positive_value()) {
            break;
        }
        let d1 = (rhs[0] * a[1][1] - rhs[1] * a[0][1]) / det;
        let d2 = (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det;
        let mut step = T::one();
        let mut improved = false;
        for _ in 0..30 {
            let trial = (s + (e1 * d1 + e2 * d2) * step).normalized();
            if residual(map, &trial) < r0 {
                s = trial;
                improved = true;
                break;
            }
            step *= T::half();
        }
        if !improved {
            break;
        }
    }
    s
}

fn tangent_basis<T: Real>(s: &Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let helper = if s.y.abs() < T::lit(0.9) { Vec3::unit_y() } else { Vec3::unit_x() };
    let e1 = helper.cross(s).normalized();
    let e2 = s.cross(&e1).normalized();
    (e1, e2)
}

/// Largest modulus of the 2×2 tangent-map eigenvalues at `point`.
pub fn tangent_spectral_radius<T: Real, M: StroboscopicMap<T> + ?Sized>(map: &M, point: &Vec3<T>) -> T {
    let (e1, e2) = tangent_basis(point);
    let j = map.jacobian(point);
    let (j1, j2) = (j.apply(&e1), j.apply(&e2));
    let a = [[e1.dot(&j1), e1.dot(&j2)], [e2.dot(&j1), e2.dot(&j2)]];
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = tr * tr - T::lit(4.0) * det;
    if disc < T::zero() {
        det.abs().sqrt()
    } else {
        let r = disc.sqrt();
        ((tr + r) * T::half()).abs().max(((tr - r) * T::half()).abs())
    }
}

/// Elliptic (stable) or hyperbolic (unstable) classification of a fixed point.
pub fn stability<T: Real, M: StroboscopicMap<T> + ?Sized>(map: &M, point: &Vec3<T>) -> Result<Stability> {
    let res = residual(map, point);
    if !(res < T::lit(1e-6)) {
        return Err(Error::Precondition(format!(
            "point is not a fixed point (residual {:e})",
            res.to_f64_lossy()
        )));
    }
    let radius = tangent_spectral_radius(map, point);
    Ok(if radius <= T::one() + T::lit(STABILITY_TOLERANCE) {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Threshold on Cχτ_R = hτ_X.
    Effective,
    /// Threshold on χτ_R = hτ_X, ignoring contrast.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    AllParamagnetic,
    AllFerromagnetic,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationScan<T> {
    pub critical_positions: Vec<T>,
    pub regime: Regime,
    /// Λ_eff (or Λ in raw mode) on the input grid.
    pub lambda: Vec<T>,
}

/// Positions where Cχτ_R crosses hτ_X, by linear interpolation between
/// grid points that bracket a sign change.
pub fn bifurcation_scan<T: Real>(
    positions: &[T],
    chi: &[T],
    contrast: &[T],
    tau_r: T,
    h_tau_x: T,
    mode: ThresholdMode,
) -> Result<BifurcationScan<T>> {
    let n = positions.len();
    if chi.len() != n || contrast.len() != n {
        return Err(invalid("profiles", "χ, C and positions must share one grid"));
    }
    if positions.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("positions", "grid must be strictly increasing"));
    }
    if !(h_tau_x > T::zero()) {
        return Err(invalid("h_tau_x", "transverse rotation must be positive"));
    }
    let drive: Vec<T> = (0..n)
        .map(|i| {
            let c = match mode {
                ThresholdMode::Effective => contrast[i],
                ThresholdMode::Raw => T::one(),
            };
            c * chi[i] * tau_r - h_tau_x
        })
        .collect();
    let mut crit = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (drive[i], drive[i + 1]);
        if a == T::zero() {
            crit.push(positions[i]);
        } else if (a > T::zero()) != (b > T::zero()) && b != T::zero() {
            let t = a / (a - b);
            crit.push(positions[i] + t * (positions[i + 1] - positions[i]));
        }
    }
    if let (Some(&last), Some(&xl)) = (drive.last(), positions.last()) {
        if last == T::zero() && n > 1 {
            crit.push(xl);
        }
    }
    let regime = if crit.is_empty() {
        if drive.iter().all(|d| *d > T::zero()) {
            Regime::AllFerromagnetic
        } else {
            Regime::AllParamagnetic
        }
    } else {
        Regime::Mixed
    };
    let lambda = drive.iter().map(|d| (*d + h_tau_x) / h_tau_x).collect();
    Ok(BifurcationScan {
        critical_positions: crit,
        regime,
        lambda,
    })
}
