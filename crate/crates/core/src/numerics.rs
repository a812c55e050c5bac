//! Small dense numerical kernels: symmetric eigenproblems, least squares,
//! quadrature and bracketed root finding.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigen-decomposition of a small real symmetric matrix by cyclic Jacobi
/// sweeps. Returns eigenvalues in ascending order and the matching
/// eigenvectors (`vectors[k]` is the k-th eigenvector).
pub fn symmetric_eigen<T: Real, const N: usize>(a: [[T; N]; N]) -> ([T; N], [[T; N]; N]) {
    let mut a = a;
    let mut v = [[T::zero(); N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }

    for _sweep in 0..64 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..N {
            diag += a[i][i] * a[i][i];
            for j in (i + 1)..N {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::two() * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: [usize; N] = [0; N];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(std::cmp::Ordering::Equal));

    let mut values = [T::zero(); N];
    let mut vectors = [[T::zero(); N]; N];
    for (k, &i) in order.iter().enumerate() {
        values[k] = a[i][i];
        for r in 0..N {
            vectors[k][r] = v[r][i];
        }
    }
    (values, vectors)
}

/// Solution of a weighted linear least-squares problem.
#[derive(Debug, Clone)]
pub struct LinearFit<T> {
    pub coefficients: Vec<T>,
    /// (AᵀWA)⁻¹; multiply by the residual variance for unweighted fits.
    pub normal_inverse: Vec<Vec<T>>,
    /// Σ w_k r_k².
    pub weighted_rss: T,
    pub residuals: Vec<T>,
}

/// Weighted least squares on a design matrix given row by row.
pub fn linear_least_squares<T: Real>(
    rows: &[Vec<T>],
    y: &[T],
    weights: Option<&[T]>,
) -> Result<LinearFit<T>> {
    let n = rows.len();
    if n == 0 || y.len() != n {
        return Err(Error::Fit("empty or mismatched data".into()));
    }
    let p = rows[0].len();
    if n < p {
        return Err(Error::Fit(format!("{n} points for {p} parameters")));
    }
    let mut ata = vec![vec![T::zero(); p]; p];
    let mut aty = vec![T::zero(); p];
    for (k, row) in rows.iter().enumerate() {
        let w = weights.map_or(T::one(), |w| w[k]);
        for i in 0..p {
            aty[i] += w * row[i] * y[k];
            for j in 0..p {
                ata[i][j] += w * row[i] * row[j];
            }
        }
    }
    let inv = invert(&ata).ok_or_else(|| Error::Fit("singular normal equations".into()))?;
    let coefficients: Vec<T> = (0..p)
        .map(|i| (0..p).fold(T::zero(), |acc, j| acc + inv[i][j] * aty[j]))
        .collect();
    let residuals: Vec<T> = rows
        .iter()
        .zip(y)
        .map(|(row, &yk)| yk - row.iter().zip(&coefficients).fold(T::zero(), |a, (&r, &c)| a + r * c))
        .collect();
    let weighted_rss = residuals
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, &r)| acc + weights.map_or(T::one(), |w| w[k]) * r * r);
    Ok(LinearFit {
        coefficients,
        normal_inverse: inv,
        weighted_rss,
        residuals,
    })
}

/// Gauss–Jordan inverse with partial pivoting; `None` if singular.
pub fn invert<T: Real>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |a, &v| a.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return None;
    }
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() <= T::epsilon() * T::lit(16.0) * scale {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != T::zero() {
                    for j in 0..n {
                        let acj = a[col][j];
                        let icj = inv[col][j];
                        a[i][j] -= f * acj;
                        inv[i][j] -= f * icj;
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Adaptive Simpson quadrature of `f` over [a, b] to absolute tolerance `tol`.
///
/// At the depth limit a panel is still accepted if its error estimate is
/// below `tol` itself, so isolated jumps converge. Fails if the integrand
/// produces a non-finite value or a panel at the depth limit is worse than that.
pub fn adaptive_simpson<T: Real, F>(f: F, a: T, b: T, tol: T, max_depth: u32) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    fn eval<T: Real, F: Fn(T) -> Result<T>>(f: &F, x: T) -> Result<T> {
        let y = f(x)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Integration(format!(
                "integrand is not finite at {}",
                x.to_f64_lossy()
            )))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<T: Real, F: Fn(T) -> Result<T>>(
        f: &F,
        a: T,
        b: T,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: T,
        floor: T,
        depth: u32,
    ) -> Result<T> {
        let m = (a + b) * T::half();
        let lm = (a + m) * T::half();
        let rm = (m + b) * T::half();
        let flm = eval(f, lm)?;
        let frm = eval(f, rm)?;
        let six = T::lit(6.0);
        let left = (m - a) / six * (fa + T::lit(4.0) * flm + fm);
        let right = (b - m) / six * (fm + T::lit(4.0) * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= T::lit(15.0) * tol {
            return Ok(left + right + delta / T::lit(15.0));
        }
        if depth == 0 {
            if delta.abs() <= floor {
                return Ok(left + right);
            }
            return Err(Error::Integration(format!(
                "adaptive quadrature did not converge on [{}, {}]",
                a.to_f64_lossy(),
                b.to_f64_lossy()
            )));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol * T::half(), floor, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol * T::half(), floor, depth - 1)?)
    }

    // Seed with a uniform panel split so narrow features are not skipped.
    let panels = 16usize;
    let h = (b - a) / T::from_usize_lossy(panels);
    let mut total = T::zero();
    for k in 0..panels {
        let lo = a + h * T::from_usize_lossy(k);
        let hi = if k + 1 == panels { b } else { lo + h };
        let mid = (lo + hi) * T::half();
        let (flo, fmid, fhi) = (eval(&f, lo)?, eval(&f, mid)?, eval(&f, hi)?);
        let whole = (hi - lo) / T::lit(6.0) * (flo + T::lit(4.0) * fmid + fhi);
        total += recurse(
            &f,
            lo,
            hi,
            flo,
            fmid,
            fhi,
            whole,
            tol / T::from_usize_lossy(panels),
            tol,
            max_depth,
        )?;
    }
    Ok(total)
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

/// Bracketed root of a continuous function by bisection to relative tolerance.
pub fn bisect<T: Real, F>(f: F, mut lo: T, mut hi: T, rel_tol: T) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain("root not bracketed".into()));
    }
    for _ in 0..400 {
        let mid = (lo + hi) * T::half();
        if (hi - lo).abs() <= rel_tol * mid.abs().max(T::min_positive_value()) {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::half())
}
