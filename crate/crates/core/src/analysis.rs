//! Measurement pipeline: fringe fits, twisting fits, χ extraction and
//! zero-phase contours of bifurcation phase maps.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::floquet::fixed_points;
use crate::numerics::linear_least_squares;
use crate::scalar::{wrap_phase, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub name: &'static str,
    pub value: T,
    pub stderr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub parameters: Vec<Estimate<T>>,
    /// sqrt of the (weighted) residual sum of squares.
    pub residual_norm: T,
    pub dof: usize,
    pub n_points: usize,
    pub r_squared: T,
    /// False when the fringe contrast is compatible with zero, so the phase is meaningless.
    pub phase_defined: bool,
}

impl<T: Real> FitResult<T> {
    pub fn get(&self, name: &str) -> Option<&Estimate<T>> {
        self.parameters.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> Option<T> {
        self.get(name).map(|e| e.value)
    }

    pub fn stderr(&self, name: &str) -> Option<T> {
        self.get(name).map(|e| e.stderr)
    }
}

fn r_squared<T: Real>(y: &[T], rss: T) -> T {
    let n = T::from_usize_lossy(y.len());
    let mean = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let tss = y.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    if tss > T::zero() {
        T::one() - rss / tss
    } else if rss <= T::epsilon() {
        T::one()
    } else {
        T::zero()
    }
}

/// Least-squares fit of P↑(α) = ½[1 + C cos(α − φ)].
///
/// Linear in (C cos φ, C sin φ). With `shots` the fit is iteratively
/// reweighted with binomial variances p(1 − p)/N and the covariance is
/// (AᵀWA)⁻¹; otherwise the residual variance scales it.
pub fn fit_fringe<T: Real>(alphas: &[T], p_up: &[T], shots: Option<usize>) -> Result<FitResult<T>> {
    let n = alphas.len();
    if p_up.len() != n {
        return Err(Error::Fit("α and P↑ lengths differ".into()));
    }
    if shots == Some(0) {
        return Err(invalid("shots", "must be at least 1"));
    }
    let mut distinct: Vec<T> = alphas.iter().map(|&a| wrap_phase(a)).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup_by(|a, b| (*a - *b).abs() < T::lit(1e-9));
    if distinct.len() < 4 {
        return Err(Error::Fit(format!("{} distinct α values; need at least 4", distinct.len())));
    }
    let span = alphas.iter().fold(T::neg_infinity(), |m, &a| m.max(a))
        - alphas.iter().fold(T::infinity(), |m, &a| m.min(a));
    if span < T::PI() - T::lit(1e-9) {
        return Err(Error::Fit("α grid spans less than π".into()));
    }
    let rows: Vec<Vec<T>> = alphas.iter().map(|a| vec![a.cos(), a.sin()]).collect();
    let y: Vec<T> = p_up.iter().map(|&p| p - T::half()).collect();

    let mut fit = linear_least_squares(&rows, &y, None)?;
    let cov_scale;
    if let Some(atoms) = shots {
        let nn = T::from_usize_lossy(atoms);
        let floor = T::half() / nn;
        for _ in 0..5 {
            let w: Vec<T> = rows
                .iter()
                .map(|r| {
                    let p = (T::half() + r[0] * fit.coefficients[0] + r[1] * fit.coefficients[1])
                        .max(floor)
                        .min(T::one() - floor);
                    nn / (p * (T::one() - p))
                })
                .collect();
            fit = linear_least_squares(&rows, &y, Some(&w))?;
        }
        cov_scale = T::one();
    } else {
        let dof = n - 2;
        cov_scale = fit.weighted_rss / T::from_usize_lossy(dof);
    }
    let (a, b) = (fit.coefficients[0], fit.coefficients[1]);
    let rho = (a * a + b * b).sqrt();
    let contrast = T::two() * rho;
    let phase = b.atan2(a);
    let cov = &fit.normal_inverse;
    let (vaa, vbb, vab) = (cov[0][0] * cov_scale, cov[1][1] * cov_scale, cov[0][1] * cov_scale);
    let (c_err, phi_err, defined);
    if rho > T::zero() {
        let (ca, cb) = (a / rho, b / rho);
        c_err = T::two() * (ca * ca * vaa + cb * cb * vbb + T::two() * ca * cb * vab).max(T::zero()).sqrt();
        let (pa, pb) = (-b / (rho * rho), a / (rho * rho));
        let pe = (pa * pa * vaa + pb * pb * vbb + T::two() * pa * pb * vab).max(T::zero()).sqrt();
        defined = contrast > T::two() * c_err && contrast > T::lit(1e-9);
        phi_err = if defined { pe } else { T::PI() };
    } else {
        c_err = T::two() * (vaa.max(vbb)).max(T::zero()).sqrt();
        phi_err = T::PI();
        defined = false;
    }
    let unweighted_rss = fit.residuals.iter().fold(T::zero(), |acc, &r| acc + r * r);
    Ok(FitResult {
        parameters: vec![
            Estimate {
                name: "contrast",
                value: contrast,
                stderr: c_err,
            },
            Estimate {
                name: "phase",
                value: phase,
                stderr: phi_err,
            },
        ],
        residual_norm: fit.weighted_rss.sqrt(),
        dof: n - 2,
        n_points: n,
        r_squared: r_squared(&y, unweighted_rss),
        phase_defined: defined,
    })
}

/// Unwraps `phis` along increasing θ, starting from the sample closest to
/// the equator, assuming neighbours differ by less than π.
pub fn unwrap_along_theta<T: Real>(thetas: &[T], phis: &[T]) -> Vec<T> {
    let n = thetas.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| thetas[a].partial_cmp(&thetas[b]).unwrap_or(std::cmp::Ordering::Equal));
    let start = (0..n)
        .min_by(|&a, &b| {
            thetas[order[a]]
                .cos()
                .abs()
                .partial_cmp(&thetas[order[b]].cos().abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let mut out = phis.to_vec();
    if n == 0 {
        return out;
    }
    let fix = |prev: T, cur: T| prev + wrap_phase(cur - prev);
    out[order[start]] = wrap_phase(phis[order[start]]);
    for k in (start + 1)..n {
        out[order[k]] = fix(out[order[k - 1]], phis[order[k]]);
    }
    for k in (0..start).rev() {
        out[order[k]] = fix(out[order[k + 1]], phis[order[k]]);
    }
    out
}

/// Fit φ(θ) = −Q cos θ (+ offset).
pub fn fit_twisting<T: Real>(thetas: &[T], phis: &[T], with_offset: bool) -> Result<FitResult<T>> {
    let n = thetas.len();
    if phis.len() != n {
        return Err(Error::Fit("θ and φ lengths differ".into()));
    }
    if n < 3 {
        return Err(Error::Fit(format!("{n} tilt values; need at least 3")));
    }
    let cos: Vec<T> = thetas.iter().map(|t| t.cos()).collect();
    if cos.iter().all(|c| c.abs() < T::lit(1e-12)) {
        return Err(Error::Unidentifiable("every tilt has cos θ = 0".into()));
    }
    if with_offset {
        let m = cos.iter().fold(T::zero(), |a, &c| a + c) / T::from_usize_lossy(n);
        if cos.iter().all(|c| (*c - m).abs() < T::lit(1e-12)) {
            return Err(Error::Unidentifiable("a single tilt cannot separate Q from the offset".into()));
        }
    }
    let y = unwrap_along_theta(thetas, phis);
    let rows: Vec<Vec<T>> = cos
        .iter()
        .map(|&c| if with_offset { vec![-c, T::one()] } else { vec![-c] })
        .collect();
    let fit = linear_least_squares(&rows, &y, None)?;
    let p = rows[0].len();
    let dof = n - p;
    let s2 = fit.weighted_rss / T::from_usize_lossy(dof);
    let mut params = vec![Estimate {
        name: "q",
        value: fit.coefficients[0],
        stderr: (fit.normal_inverse[0][0] * s2).max(T::zero()).sqrt(),
    }];
    if with_offset {
        params.push(Estimate {
            name: "offset",
            value: fit.coefficients[1],
            stderr: (fit.normal_inverse[1][1] * s2).max(T::zero()).sqrt(),
        });
    }
    Ok(FitResult {
        parameters: params,
        residual_norm: fit.weighted_rss.sqrt(),
        dof,
        n_points: n,
        r_squared: r_squared(&y, fit.weighted_rss),
        phase_defined: true,
    })
}

/// Weighted linear fit Q = χ τ_R + b. Without `q_stderr` the fit is
/// unweighted and errors come from the residual scatter (infinite when
/// there are no residual degrees of freedom).
pub fn fit_chi<T: Real>(tau_r: &[T], q: &[T], q_stderr: Option<&[T]>) -> Result<FitResult<T>> {
    let n = tau_r.len();
    if q.len() != n || q_stderr.is_some_and(|s| s.len() != n) {
        return Err(Error::Fit("τ_R, Q and error lengths differ".into()));
    }
    let first = tau_r.first().copied().unwrap_or(T::zero());
    if !tau_r.iter().any(|t| (*t - first).abs() > T::lit(1e-12) * (T::one() + first.abs())) {
        return Err(Error::Unidentifiable("need at least two distinct τ_R".into()));
    }
    let weights: Option<Vec<T>> = match q_stderr {
        Some(s) => {
            if s.iter().any(|e| !(*e > T::zero())) {
                return Err(invalid("q_stderr", "uncertainties must be positive"));
            }
            Some(s.iter().map(|e| T::one() / (*e * *e)).collect())
        }
        None => None,
    };
    let rows: Vec<Vec<T>> = tau_r.iter().map(|&t| vec![t, T::one()]).collect();
    let fit = linear_least_squares(&rows, q, weights.as_deref())?;
    let dof = n - 2;
    let scale = if weights.is_some() {
        T::one()
    } else if dof == 0 {
        T::infinity()
    } else {
        fit.weighted_rss / T::from_usize_lossy(dof)
    };
    let err = |k: usize| {
        let v = fit.normal_inverse[k][k] * scale;
        if v.is_nan() {
            T::infinity()
        } else {
            v.max(T::zero()).sqrt()
        }
    };
    let rss = fit.residuals.iter().fold(T::zero(), |a, &r| a + r * r);
    Ok(FitResult {
        parameters: vec![
            Estimate {
                name: "chi",
                value: fit.coefficients[0],
                stderr: err(0),
            },
            Estimate {
                name: "intercept",
                value: fit.coefficients[1],
                stderr: err(1),
            },
        ],
        residual_norm: fit.weighted_rss.sqrt(),
        dof,
        n_points: n,
        r_squared: r_squared(q, rss),
        phase_defined: true,
    })
}

/// Phase and contrast on a (position, θ) grid; `phase[ix][iθ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMap<T> {
    pub thetas: Vec<T>,
    pub positions: Vec<T>,
    pub phase: Vec<Vec<T>>,
    pub contrast: Vec<Vec<T>>,
}

impl<T: Real> PhaseMap<T> {
    pub fn new(thetas: Vec<T>, positions: Vec<T>, phase: Vec<Vec<T>>, contrast: Vec<Vec<T>>) -> Result<Self> {
        let monotone = |v: &[T]| v.windows(2).all(|w| w[1] > w[0]);
        if !monotone(&thetas) || !monotone(&positions) {
            return Err(invalid("phase_map", "axes must be strictly increasing"));
        }
        let rect = |g: &[Vec<T>]| g.len() == positions.len() && g.iter().all(|c| c.len() == thetas.len());
        if !rect(&phase) || !rect(&contrast) {
            return Err(invalid("phase_map", "grid is not rectangular"));
        }
        Ok(Self {
            thetas,
            positions,
            phase,
            contrast,
        })
    }

    /// Dense `theta x phi C` rows.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# theta_rad\tx_um\tphi_rad\tC\n");
        for (ix, x) in self.positions.iter().enumerate() {
            for (it, t) in self.thetas.iter().enumerate() {
                out.push_str(&format!(
                    "{:.9e}\t{:.9e}\t{:.12e}\t{:.12e}\n",
                    t.to_f64_lossy(),
                    x.to_f64_lossy(),
                    self.phase[ix][it].to_f64_lossy(),
                    self.contrast[ix][it].to_f64_lossy()
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourColumn<T> {
    pub position: T,
    /// θ values where φ = 0, ascending.
    pub roots: Vec<T>,
    /// Sign changes skipped because φ jumped by more than π (a wrap, not a zero).
    pub skipped_jumps: usize,
}

impl<T> ContourColumn<T> {
    /// One or three roots, as the fixed-point structure allows.
    pub fn is_complete(&self) -> bool {
        matches!(self.roots.len(), 1 | 3)
    }
}

/// φ = 0 crossings along θ in every position column, by linear interpolation.
/// A run of samples that are exactly zero counts as one root at its midpoint.
pub fn zero_phase_contour<T: Real>(map: &PhaseMap<T>) -> Vec<ContourColumn<T>> {
    map.positions
        .iter()
        .zip(&map.phase)
        .map(|(&x, col)| {
            let th = &map.thetas;
            let mut roots = Vec::new();
            let mut skipped = 0;
            let mut k = 0;
            while k < col.len() {
                if col[k] == T::zero() {
                    let start = k;
                    while k + 1 < col.len() && col[k + 1] == T::zero() {
                        k += 1;
                    }
                    roots.push((th[start] + th[k]) * T::half());
                    k += 1;
                    continue;
                }
                if k + 1 == col.len() {
                    break;
                }
                let (a, b) = (col[k], col[k + 1]);
                k += 1;
                if b == T::zero() || (a > T::zero()) == (b > T::zero()) {
                    continue;
                }
                if (b - a).abs() > T::PI() {
                    skipped += 1;
                    continue;
                }
                let t = a / (a - b);
                roots.push(th[k - 1] + t * (th[k] - th[k - 1]));
            }
            ContourColumn {
                position: x,
                roots,
                skipped_jumps: skipped,
            }
        })
        .collect()
}

/// Tilts θ of the fixed points for a given Λ_eff, ascending.
pub fn predicted_contour<T: Real>(lambda_eff: T) -> Vec<T> {
    let mut t: Vec<T> = fixed_points(lambda_eff)
        .points
        .iter()
        .map(|p| p.direction.z.max(-T::one()).min(T::one()).acos())
        .collect();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    #[test]
    fn fringe_exact_recovery() {
        let a = grid(21);
        let p: Vec<f64> = a.iter().map(|x| 0.5 * (1.0 + 0.8 * (x - 1.0).cos())).collect();
        let f = fit_fringe(&a, &p, None).unwrap();
        assert!((f.value("contrast").unwrap() - 0.8).abs() < 1e-12);
        assert!((f.value("phase").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fringe_wraparound() {
        let a = grid(16);
        let p: Vec<f64> = a.iter().map(|x| 0.5 * (1.0 + 0.6 * (x - 3.1).cos())).collect();
        let f = fit_fringe(&a, &p, None).unwrap();
        let d = wrap_phase(f.value("phase").unwrap() - 3.1);
        assert!(d.abs() < 1e-12);
        let p: Vec<f64> = a.iter().map(|x| 0.5 * (1.0 + 0.6 * (x + 3.1).cos())).collect();
        let f = fit_fringe(&a, &p, None).unwrap();
        assert!(wrap_phase(f.value("phase").unwrap() + 3.1).abs() < 1e-12);
    }

    #[test]
    fn fringe_zero_contrast_flags_phase() {
        let a = grid(12);
        let p = vec![0.5; 12];
        let f = fit_fringe(&a, &p, None).unwrap();
        assert!(!f.phase_defined);
        assert!(f.value("contrast").unwrap().abs() < 1e-12);
    }

    #[test]
    fn fringe_degenerate_grid() {
        assert!(fit_fringe(&[0.0, 0.1, 0.2], &[0.5, 0.5, 0.5], None).is_err());
        let a = [0.0, 0.5, 1.0, 1.5, 2.0];
        assert!(fit_fringe(&a, &[0.5; 5], None).is_err());
    }

    #[test]
    fn twisting_exact_and_offset() {
        let th: Vec<f64> = (0..16).map(|k| PI * (k as f64 + 0.5) / 16.0).collect();
        let phi: Vec<f64> = th.iter().map(|t| -0.5 * t.cos()).collect();
        let f = fit_twisting(&th, &phi, false).unwrap();
        assert!((f.value("q").unwrap() - 0.5).abs() < 1e-12);
        let shifted: Vec<f64> = phi.iter().map(|p| p + 0.1).collect();
        let f = fit_twisting(&th, &shifted, true).unwrap();
        assert!((f.value("q").unwrap() - 0.5).abs() < 1e-6);
        assert!((f.value("offset").unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn twisting_unwraps() {
        let th: Vec<f64> = (0..16).map(|k| PI * (k as f64 + 0.5) / 16.0).collect();
        let phi: Vec<f64> = th.iter().map(|t| wrap_phase(-3.5 * t.cos())).collect();
        let f = fit_twisting(&th, &phi, false).unwrap();
        assert!((f.value("q").unwrap() - 3.5).abs() < 1e-10);
    }

    #[test]
    fn twisting_unidentifiable() {
        let th = [PI / 2.0; 4];
        assert!(matches!(fit_twisting(&th, &[0.0; 4], false), Err(Error::Unidentifiable(_))));
    }

    #[test]
    fn chi_fits() {
        let tau = [10.0, 20.0, 30.0, 40.0];
        let slope = 2.0 * PI * 0.015;
        let q: Vec<f64> = tau.iter().map(|t| slope * t).collect();
        let f = fit_chi(&tau, &q, None).unwrap();
        assert!((f.value("chi").unwrap() - slope).abs() < 1e-12);
        let f = fit_chi(&tau, &[0.0; 4], None).unwrap();
        assert_eq!(f.value("chi").unwrap(), 0.0);
        assert!(matches!(fit_chi(&[5.0, 5.0], &[1.0, 2.0], None), Err(Error::Unidentifiable(_))));
        let two = fit_chi(&[1.0_f64, 2.0], &[1.0, 2.0], None).unwrap();
        assert!(two.stderr("chi").unwrap().is_infinite());
    }

    #[test]
    fn contour_roots() {
        let th: Vec<f64> = (0..9).map(|k| PI * k as f64 / 8.0).collect();
        let flat: Vec<f64> = th.iter().map(|t| -0.3 * t.cos()).collect();
        let pos: Vec<f64> = th.iter().map(|_| 0.2).collect();
        let m = PhaseMap::new(th.clone(), vec![0.0, 1.0], vec![flat.clone(), pos], vec![vec![1.0; 9]; 2]).unwrap();
        let c = zero_phase_contour(&m);
        assert_eq!(c[0].roots.len(), 1);
        assert!((c[0].roots[0] - PI / 2.0).abs() < 1e-12);
        assert!(c[1].roots.is_empty());
    }

    #[test]
    fn flat_zero_column_is_one_root() {
        let th: Vec<f64> = (0..7).map(|k| PI * (k as f64 + 0.5) / 7.0).collect();
        let m = PhaseMap::new(th, vec![0.0], vec![vec![0.0; 7]], vec![vec![1.0; 7]]).unwrap();
        let c = zero_phase_contour(&m);
        assert_eq!(c[0].roots.len(), 1);
        assert!((c[0].roots[0] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_contour_symmetric() {
        let t = predicted_contour(2.0_f64);
        assert_eq!(t.len(), 3);
        assert!((t[0] + t[2] - PI).abs() < 1e-12);
        assert!((t[1] - PI / 2.0).abs() < 1e-12);
    }
}
