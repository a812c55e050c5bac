//! Phase maps over tilt and position across a Gaussian dressing beam, with
//! zero-phase contours and the predicted fixed-point overlay.

use rydberg_ising::analysis::{fit_twisting, predicted_contour, zero_phase_contour, ContourColumn};
use rydberg_ising::cloud::meanfield_chi;
use rydberg_ising::floquet::{bifurcation_scan, Regime, ThresholdMode};
use rydberg_ising::numerics::linear_least_squares;
use rydberg_ising::pair_potential::SoftCore;
use rydberg_ising::spin_engine::{build_floquet_sequence, CollectiveBackend, SpinBackend};
use rydberg_ising::PhaseMap64;
use serde::Serialize;

use super::beam;
use crate::config::{theta_grid, ExperimentConfig};
use crate::error::CliError;
use crate::output::{row, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianFit {
    pub peak: f64,
    pub center_um: f64,
    /// 1/e half-width of the χτ_R profile.
    pub width_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapRun {
    pub h_tau_x_rad: f64,
    #[serde(skip)]
    pub map: PhaseMap64,
    pub contours: Vec<ContourColumn<f64>>,
    /// From the calibrated profile; empty for hτ_X = 0.
    pub critical_positions_um: Vec<f64>,
    /// From the model profile the simulation was driven with.
    pub model_critical_positions_um: Vec<f64>,
    pub regime: Option<Regime>,
    /// Positions where the contour root count changes.
    pub topology_changes_um: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationReport {
    pub tau_r_us: f64,
    pub cycles: usize,
    pub positions_um: Vec<f64>,
    /// Cχτ_R per cycle that drove each bin.
    pub model_twist: Vec<f64>,
    /// χτ_R recovered from the hτ_X = 0 twisting fits, when that run exists.
    pub calibrated_twist: Option<Vec<f64>>,
    pub calibration_fit: Option<GaussianFit>,
    pub contrast: Vec<f64>,
    pub runs: Vec<MapRun>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<BifurcationReport, CliError> {
    let b = &cfg.bifurcation;
    let k = cfg.sequence.cycles;
    if k == 0 {
        return Err(CliError::Config("bifurcation maps need sequence.cycles ≥ 1".into()));
    }
    let tau_r = b.tau_r_us;
    let c = b.contrast;
    let beam = beam(cfg, false)?;
    let n = b.position_bins;
    let positions: Vec<f64> = (0..n)
        .map(|i| beam.center - b.half_width_um + 2.0 * b.half_width_um * i as f64 / (n - 1) as f64)
        .collect();

    let peak_twist = match b.peak_twist_rad {
        Some(t) => t,
        None if cfg.cloud.density_per_um3 == 0.0 => 0.0,
        None => {
            let params = cfg.dressing_params()?;
            let est = meanfield_chi(
                cfg.cloud.density_per_um3,
                &SoftCore { params },
                true,
                cfg.potential.mc_samples,
                cfg.cloud.seed,
            )?;
            c * est.quadrature * cfg.dressing.chi_calibration * tau_r
        }
    };
    // J ∝ Ω⁴, so the twist follows the fourth power of the local Rabi frequency.
    let model_twist: Vec<f64> = positions
        .iter()
        .map(|&x| peak_twist * (beam.rabi_at_coordinate(x) / beam.peak_rabi).powi(4))
        .collect();
    let contrast = vec![c; n];
    let thetas = theta_grid(b.theta_points);

    let mut runs = Vec::with_capacity(b.h_tau_x_rad.len());
    let mut calibrated_twist = None;
    for &angle in &b.h_tau_x_rad {
        let tau_x = cfg.sequence.tau_x_us;
        let h = if tau_x > 0.0 { angle / tau_x } else { 0.0 };
        if angle > 0.0 && tau_x == 0.0 {
            return Err(CliError::Config("a transverse rotation needs tau_x_us > 0".into()));
        }
        let mut phase = Vec::with_capacity(n);
        let mut cgrid = Vec::with_capacity(n);
        for (ix, &twist) in model_twist.iter().enumerate() {
            let chi = if c > 0.0 { twist / (c * tau_r) } else { 0.0 };
            let backend = CollectiveBackend::new(chi, contrast[ix]);
            let mut col = Vec::with_capacity(thetas.len());
            let mut ccol = Vec::with_capacity(thetas.len());
            for &theta in &thetas {
                let out = backend.evolve(&build_floquet_sequence(theta, 0.0, k, tau_r, tau_x, h, cfg.sequence.echo))?;
                col.push(out.phase());
                ccol.push(out.contrast());
            }
            phase.push(col);
            cgrid.push(ccol);
        }
        let map = PhaseMap64::new(thetas.clone(), positions.clone(), phase, cgrid)?;
        let contours = zero_phase_contour(&map);
        let topology_changes_um = contours
            .windows(2)
            .filter(|w| w[0].roots.len() != w[1].roots.len())
            .map(|w| 0.5 * (w[0].position + w[1].position))
            .collect();

        let (mut critical, mut model_critical, mut regime) = (Vec::new(), Vec::new(), None);
        if angle == 0.0 {
            let twist: Vec<f64> = map
                .phase
                .iter()
                .map(|col| Ok(fit_twisting(&thetas, col, false)?.value("q").unwrap_or(0.0).abs() / k as f64))
                .collect::<Result<_, rydberg_ising::Error>>()?;
            calibrated_twist = Some(twist);
        } else {
            let chi_model: Vec<f64> = model_twist.iter().map(|t| t / (c.max(f64::MIN_POSITIVE) * tau_r)).collect();
            let scan = bifurcation_scan(&positions, &chi_model, &contrast, tau_r, angle, ThresholdMode::Effective)?;
            model_critical = scan.critical_positions;
            regime = Some(scan.regime);
            if let Some(cal) = &calibrated_twist {
                let chi_cal: Vec<f64> = cal.iter().map(|t| t / tau_r).collect();
                let ones = vec![1.0; n];
                critical = bifurcation_scan(&positions, &chi_cal, &ones, tau_r, angle, ThresholdMode::Effective)?
                    .critical_positions;
            }
        }
        runs.push(MapRun {
            h_tau_x_rad: angle,
            map,
            contours,
            critical_positions_um: critical,
            model_critical_positions_um: model_critical,
            regime,
            topology_changes_um,
        });
    }

    let calibration_fit = calibrated_twist.as_deref().and_then(|t| gaussian_fit(&positions, t));
    Ok(BifurcationReport {
        tau_r_us: tau_r,
        cycles: k,
        positions_um: positions,
        model_twist,
        calibrated_twist,
        calibration_fit,
        contrast,
        runs,
    })
}

/// Least-squares Gaussian through the points above 1% of the maximum, via
/// a quadratic fit of the logarithm.
fn gaussian_fit(x: &[f64], y: &[f64]) -> Option<GaussianFit> {
    let max = y.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return None;
    }
    let (xs, ls): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 1e-2 * max)
        .map(|(&a, &v)| (a, v.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let design: Vec<Vec<f64>> = xs.iter().map(|&a| vec![1.0, a, a * a]).collect();
    let fit = linear_least_squares(&design, &ls, None).ok()?;
    let (a0, a1, a2) = (fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]);
    if !(a2 < 0.0) {
        return None;
    }
    let center = -a1 / (2.0 * a2);
    Some(GaussianFit {
        peak: (a0 - a1 * a1 / (4.0 * a2)).exp(),
        center_um: center,
        width_um: (-1.0 / a2).sqrt(),
    })
}

pub fn tables(report: &BifurcationReport) -> Vec<Table> {
    let mut out = Vec::new();
    let mut profile = String::from("# x_um\tC_chi_tau_r_model\tchi_tau_r_calibrated\tC\n");
    for (i, &x) in report.positions_um.iter().enumerate() {
        let cal = report.calibrated_twist.as_ref().map_or(f64::NAN, |t| t[i]);
        profile.push_str(&row(&[x, report.model_twist[i], cal, report.contrast[i]]));
    }
    out.push(Table::new("bifurcation_profile.tsv", profile));
    for r in &report.runs {
        let tag = format!("h{:.3}", r.h_tau_x_rad);
        out.push(Table::new(format!("phase_map_{tag}.tsv"), r.map.to_text()));
        let mut contour = String::from("# x_um\tn_roots\ttheta_roots_rad...\n");
        let mut overlay = String::from("# x_um\tlambda_eff\ttheta_fixed_points_rad...\n");
        for (i, col) in r.contours.iter().enumerate() {
            let mut v = vec![col.position, col.roots.len() as f64];
            v.extend(&col.roots);
            contour.push_str(&row(&v));
            let lambda = if r.h_tau_x_rad > 0.0 {
                report.model_twist[i] / r.h_tau_x_rad
            } else {
                0.0
            };
            let mut v = vec![col.position, lambda];
            if r.h_tau_x_rad > 0.0 {
                v.extend(predicted_contour(lambda));
            }
            overlay.push_str(&row(&v));
        }
        out.push(Table::new(format!("contour_{tag}.tsv"), contour));
        out.push(Table::new(format!("overlay_{tag}.tsv"), overlay));
    }
    out
}

/// φ(θ) along the configured cuts, taken from the nearest position column.
pub fn cut_table(cfg: &ExperimentConfig, report: &BifurcationReport) -> Table {
    let mut s = String::from("# h_tau_x_rad\tcut_um\tx_um\ttheta_rad\tphi_rad\tC\n");
    for r in &report.runs {
        for &cut in &cfg.bifurcation.cuts_um {
            let ix = report
                .positions_um
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - cut).abs().total_cmp(&(b.1 - cut).abs()))
                .map_or(0, |(i, _)| i);
            for (it, &t) in r.map.thetas.iter().enumerate() {
                s.push_str(&row(&[
                    r.h_tau_x_rad,
                    cut,
                    report.positions_um[ix],
                    t,
                    r.map.phase[ix][it],
                    r.map.contrast[ix][it],
                ]));
            }
        }
    }
    Table::new("bifurcation_cuts.tsv", s)
}
