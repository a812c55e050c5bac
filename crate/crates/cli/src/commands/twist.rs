//! Spin-echo one-axis twisting: φ(θ) at several dressing times, fitted
//! twisting strengths Q(τ_R) and the mean-field shift χ.

use rydberg_ising::analysis::{fit_chi, fit_fringe, fit_twisting};
use rydberg_ising::cloud::meanfield_chi;
use rydberg_ising::pair_potential::SoftCore;
use rydberg_ising::spin_engine::{
    build_spin_echo_sequence, simulate_fringe, BackendKind, CollectiveBackend, ExactBackend, MeanFieldBackend,
    SpinBackend,
};
use rydberg_ising::angular_to_khz;
use serde::Serialize;

use super::{build_ensemble, Value};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{row, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistPoint {
    pub theta: f64,
    pub phase: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistSeries {
    pub tau_r_us: f64,
    pub points: Vec<TwistPoint>,
    pub q: Value,
    pub r_squared: f64,
    pub mean_contrast: f64,
    pub surviving_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistReport {
    pub backend: BackendKind,
    pub atoms: usize,
    /// Mean of −½Σ_j J_ij over the sample, after calibration.
    pub sample_chi_khz: f64,
    pub series: Vec<TwistSeries>,
    /// Slope of Q against τ_R, absent with fewer than two distinct τ_R.
    pub chi_khz: Option<Value>,
    pub chi_fit_r_squared: Option<f64>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<TwistReport, CliError> {
    let (backend, atoms, sample_chi): (Box<dyn SpinBackend<f64>>, usize, f64) = match cfg.backend {
        BackendKind::MeanField => {
            let e = build_ensemble(cfg, cfg.cloud.atoms, false)?;
            let chi = e.model.couplings.mean_chi();
            (
                Box::new(MeanFieldBackend::new(e.model, cfg.decoherence_model())),
                cfg.cloud.atoms,
                chi,
            )
        }
        BackendKind::Exact => {
            let n = cfg.cloud.exact_atoms;
            if n > cfg.cloud.max_exact_atoms {
                return Err(rydberg_ising::Error::Capacity {
                    atoms: n,
                    limit: cfg.cloud.max_exact_atoms,
                }
                .into());
            }
            let e = build_ensemble(cfg, n, false)?;
            let chi = e.model.couplings.mean_chi();
            let b = ExactBackend::with_limit(e.model, cfg.decoherence_model(), cfg.cloud.max_exact_atoms)?;
            (Box::new(b), n, chi)
        }
        BackendKind::Collective => {
            let params = cfg.dressing_params()?;
            let est = meanfield_chi(
                cfg.cloud.density_per_um3,
                &SoftCore { params },
                true,
                cfg.potential.mc_samples,
                cfg.cloud.seed,
            )?;
            let chi = est.quadrature * cfg.dressing.chi_calibration;
            (Box::new(CollectiveBackend::new(chi, 1.0)), 1, chi)
        }
    };

    let thetas = cfg.thetas();
    let alphas = cfg.alphas();
    let shots = cfg.sequence.shots;
    let mut series = Vec::with_capacity(cfg.sequence.tau_r_us.len());
    for (it, &tau) in cfg.sequence.tau_r_us.iter().enumerate() {
        let mut points = Vec::with_capacity(thetas.len());
        let mut survival = 1.0;
        for (ith, &theta) in thetas.iter().enumerate() {
            let out = backend.evolve(&build_spin_echo_sequence(theta, tau, 0.0))?;
            survival = out.surviving_fraction;
            let seed = fringe_seed(cfg.cloud.seed, it, ith);
            let fringe = simulate_fringe(&out.echo_frame(), &alphas, shots, seed)?;
            let fit = fit_fringe(&alphas, &fringe.p_up, shots)?;
            points.push(TwistPoint {
                theta,
                phase: fit.value("phase").unwrap_or(0.0),
                contrast: fit.value("contrast").unwrap_or(0.0),
            });
        }
        let phis: Vec<f64> = points.iter().map(|p| p.phase).collect();
        let fit = fit_twisting(&thetas, &phis, false)?;
        series.push(TwistSeries {
            tau_r_us: tau,
            q: Value {
                estimate: fit.value("q").unwrap_or(0.0),
                stderr: fit.stderr("q").unwrap_or(0.0),
            },
            r_squared: fit.r_squared,
            mean_contrast: points.iter().map(|p| p.contrast).sum::<f64>() / points.len() as f64,
            surviving_fraction: survival,
            points,
        });
    }

    let taus: Vec<f64> = series.iter().map(|s| s.tau_r_us).collect();
    let distinct = taus.iter().any(|t| (t - taus[0]).abs() > 0.0);
    let (chi_khz, chi_r2) = if distinct {
        let qs: Vec<f64> = series.iter().map(|s| s.q.estimate).collect();
        let errs: Vec<f64> = series.iter().map(|s| s.q.stderr).collect();
        let weights = (shots.is_some() && errs.iter().all(|e| *e > 0.0)).then_some(errs.as_slice());
        let fit = fit_chi(&taus, &qs, weights)?;
        (
            Some(Value {
                estimate: angular_to_khz(fit.value("chi").unwrap_or(0.0)),
                stderr: angular_to_khz(fit.stderr("chi").unwrap_or(0.0)),
            }),
            Some(fit.r_squared),
        )
    } else {
        (None, None)
    };

    Ok(TwistReport {
        backend: cfg.backend,
        atoms,
        sample_chi_khz: angular_to_khz(sample_chi),
        series,
        chi_khz,
        chi_fit_r_squared: chi_r2,
    })
}

fn fringe_seed(seed: u64, tau_index: usize, theta_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(((tau_index as u64) << 32) | theta_index as u64)
}

pub fn tables(report: &TwistReport) -> Vec<Table> {
    let mut phase = String::from("# tau_r_us\ttheta_rad\tphi_rad\tC\n");
    let mut fits = String::from("# tau_r_us\tQ_rad\tQ_stderr\tR2\tC_mean\tsurviving\n");
    for s in &report.series {
        for p in &s.points {
            phase.push_str(&row(&[s.tau_r_us, p.theta, p.phase, p.contrast]));
        }
        fits.push_str(&row(&[
            s.tau_r_us,
            s.q.estimate,
            s.q.stderr,
            s.r_squared,
            s.mean_contrast,
            s.surviving_fraction,
        ]));
    }
    vec![Table::new("twist_phase.tsv", phase), Table::new("twist_fits.tsv", fits)]
}
