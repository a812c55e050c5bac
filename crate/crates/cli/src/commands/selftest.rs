//! Quick numerical sanity checks, run without any configuration.

use rydberg_ising::analysis::fit_fringe;
use rydberg_ising::cloud::{coupling_matrix, sample_cloud, BeamProfile, Boundary, Geometry};
use rydberg_ising::floquet::{fixed_points, map_fixed_points};
use rydberg_ising::pair_potential::{dressed_interaction_exact, dressed_interaction_softcore, interaction_range};
use rydberg_ising::spin_engine::{
    build_spin_echo_sequence, simulate_fringe, DecoherenceModel, ExactBackend, IsingModel, SpinBackend,
};
use rydberg_ising::{DressingParams64, FloquetParams64, Vec3f64};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

pub fn run() -> Result<SelfTestReport, CliError> {
    let base = DressingParams64::operating_point();
    let mut checks = Vec::new();

    let weak = base.with_rabi_frequency(0.05 * base.detuning.abs())?;
    let j0 = weak.blockade_plateau();
    let j = dressed_interaction_exact(1e-3, 0.0, &weak)?;
    checks.push(Check::below("blockade plateau relative error", ((j - j0) / j0).abs(), 0.01));

    let p = base.with_rabi_frequency(0.1 * base.detuning.abs())?;
    let rc = interaction_range(&p, 0.0)?;
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        let r = rc * 0.2 * 25f64.powf(i as f64 / 40.0);
        let e = dressed_interaction_exact(r, 0.0, &p)?;
        let s = dressed_interaction_softcore(r, 0.0, &p)?;
        worst = worst.max(((s - e) / e).abs());
    }
    checks.push(Check::below("soft-core vs exact relative deviation", worst, 0.05));

    let cloud = sample_cloud(Geometry::Box { lengths: [5.0; 3] }, 0.048, Some(6), 7)?;
    let beam = BeamProfile::new(base.rabi_frequency, 4.0, 1.0)?;
    let couplings = coupling_matrix(&cloud, &beam, &base, Boundary::Open)?;
    let seq = build_spin_echo_sequence(1.1, 20.0, 0.0);
    let with = ExactBackend::new(IsingModel::new(couplings.clone(), true), DecoherenceModel::none())?.evolve(&seq)?;
    let without = ExactBackend::new(IsingModel::new(couplings.without_light_shifts(), false), DecoherenceModel::none())?
        .evolve(&seq)?;
    let diff = with
        .spins
        .iter()
        .zip(&without.spins)
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max);
    checks.push(Check::below("echo cancellation of linear terms", diff, 1e-10));

    let map = FloquetParams64::new(0.15 / 10.0, 10.0, 0.075, 1.0, 1.0)?.collective_map();
    let found = map_fixed_points(&map)?;
    let expected = fixed_points(2.0);
    let mut err: f64 = 0.0;
    for e in &expected.points {
        let d = found
            .points
            .iter()
            .map(|f| f.direction.distance(&e.direction))
            .fold(f64::INFINITY, f64::min);
        err = err.max(d);
    }
    checks.push(Check::below("stroboscopic fixed points vs continuum", err, 0.02));

    let alphas: Vec<f64> = (0..16).map(|k| std::f64::consts::TAU * k as f64 / 16.0).collect();
    let mean = Vec3f64::from_polar(std::f64::consts::FRAC_PI_2, 1.0) * 0.8;
    let fringe = simulate_fringe(&mean, &alphas, None, 0)?;
    let fit = fit_fringe(&alphas, &fringe.p_up, None)?;
    let dev = (fit.value("contrast").unwrap_or(0.0) - 0.8)
        .abs()
        .max((fit.value("phase").unwrap_or(0.0) - 1.0).abs());
    checks.push(Check::below("fringe fit round trip", dev, 1e-9));

    Ok(SelfTestReport { checks })
}
