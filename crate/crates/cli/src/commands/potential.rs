//! Dressed pair potential curves and the derived interaction scales.

use rydberg_ising::cloud::{interaction_sphere_count, meanfield_chi};
use rydberg_ising::pair_potential::{interaction_range, PairPotentialCurve, PotentialMethod, SoftCore};
use rydberg_ising::angular_to_khz;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Table;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialReport {
    pub interaction_range_um: f64,
    /// Signed plateau J₀ in rad/µs and as J₀/2π in kHz.
    pub j0_rad_per_us: f64,
    pub j0_khz: f64,
    pub light_shift_khz: f64,
    pub sphere_count: f64,
    pub chi_th_khz: f64,
    pub chi_th_monte_carlo_khz: f64,
    pub chi_th_monte_carlo_stderr_khz: f64,
    pub chi_calibrated_khz: f64,
    #[serde(skip)]
    pub curves: Vec<PairPotentialCurve<f64>>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<PotentialReport, CliError> {
    let params = cfg.dressing_params()?;
    let p = &cfg.potential;
    let n = p.points;
    let radii: Vec<f64> = (0..n)
        .map(|i| p.r_min_um * (p.r_max_um / p.r_min_um).powf(i as f64 / (n - 1) as f64))
        .collect();
    let curves = p
        .methods
        .iter()
        .map(|&m| PairPotentialCurve::tabulate(&params, &radii, p.theta_rad, m))
        .collect::<Result<Vec<_>, _>>()?;
    let r_c = interaction_range(&params, p.theta_rad)?;
    let density = cfg.cloud.density_per_um3;
    let chi = meanfield_chi(density, &SoftCore { params: params.clone() }, true, p.mc_samples, cfg.cloud.seed)?;
    Ok(PotentialReport {
        interaction_range_um: r_c,
        j0_rad_per_us: params.blockade_plateau(),
        j0_khz: angular_to_khz(params.blockade_plateau()),
        light_shift_khz: angular_to_khz(params.light_shift()),
        sphere_count: interaction_sphere_count(density, r_c)?,
        chi_th_khz: angular_to_khz(chi.quadrature),
        chi_th_monte_carlo_khz: angular_to_khz(chi.monte_carlo),
        chi_th_monte_carlo_stderr_khz: angular_to_khz(chi.monte_carlo_stderr),
        chi_calibrated_khz: angular_to_khz(chi.quadrature) * cfg.dressing.chi_calibration,
        curves,
    })
}

pub fn tables(report: &PotentialReport) -> Vec<Table> {
    report
        .curves
        .iter()
        .map(|c| {
            let name = match c.method {
                PotentialMethod::Exact => "potential_exact.tsv",
                PotentialMethod::Softcore => "potential_softcore.tsv",
            };
            Table::new(name, c.to_text())
        })
        .collect()
}
