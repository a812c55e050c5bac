pub mod bifurcation;
pub mod floquet;
pub mod potential;
pub mod selftest;
pub mod twist;

use rydberg_ising::cloud::{coupling_matrix, sample_cloud, BeamProfile};
use rydberg_ising::spin_engine::IsingModel;
use rydberg_ising::AtomCloud64;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Frozen cloud plus its Ising model, couplings already multiplied by the
/// configured χ calibration.
pub struct Ensemble {
    pub cloud: AtomCloud64,
    pub model: IsingModel<f64>,
}

pub fn beam(cfg: &ExperimentConfig, force_uniform: bool) -> Result<BeamProfile<f64>, CliError> {
    let rabi = cfg.dressing_params()?.rabi_frequency;
    let b = if force_uniform || cfg.beam.uniform {
        BeamProfile::uniform(rabi)?
    } else {
        BeamProfile::new(rabi, cfg.beam.waist_um, cfg.beam.center_um)?
    };
    Ok(b)
}

pub fn build_ensemble(cfg: &ExperimentConfig, atoms: usize, force_uniform: bool) -> Result<Ensemble, CliError> {
    let params = cfg.dressing_params()?;
    let geometry = cfg.geometry(atoms);
    let cloud = sample_cloud(geometry, cfg.cloud.density_per_um3, Some(atoms), cfg.cloud.seed)?;
    let beam = beam(cfg, force_uniform)?;
    let couplings = coupling_matrix(&cloud, &beam, &params, cfg.boundary())?.scaled(cfg.dressing.chi_calibration);
    Ok(Ensemble {
        cloud,
        model: IsingModel::new(couplings, true),
    })
}

/// A named estimate with its one-sigma error, as exported in summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Value {
    pub estimate: f64,
    pub stderr: f64,
}
