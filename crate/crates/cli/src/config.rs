//! Experiment configuration. Frequencies are given as cyclic values in MHz
//! (ω = 2πν), lengths in µm, times in µs and angles in rad; every key
//! carries its unit as a suffix.

use std::path::{Path, PathBuf};

use rydberg_ising::cloud::{Boundary, Geometry};
use rydberg_ising::pair_potential::{DressingParams, PotentialMethod};
use rydberg_ising::spin_engine::{BackendKind, DecoherenceModel, EchoPlacement};
use rydberg_ising::{mhz_to_angular, DressingParams64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub backend: BackendKind,
    pub output_dir: PathBuf,
    pub dressing: DressingSection,
    pub cloud: CloudSection,
    pub beam: BeamSection,
    pub sequence: SequenceSection,
    pub decoherence: DecoherenceSection,
    pub potential: PotentialSection,
    pub floquet: FloquetSection,
    pub bifurcation: BifurcationSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::MeanField,
            output_dir: PathBuf::from("out"),
            dressing: DressingSection::default(),
            cloud: CloudSection::default(),
            beam: BeamSection::default(),
            sequence: SequenceSection::default(),
            decoherence: DecoherenceSection::default(),
            potential: PotentialSection::default(),
            floquet: FloquetSection::default(),
            bifurcation: BifurcationSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DressingSection {
    pub rabi_frequency_mhz: f64,
    pub detuning_mhz: f64,
    pub forster_defect_mhz: f64,
    pub c3_mhz_um3: f64,
    /// Soft-core pole guard as a fraction of |Δ|.
    pub pole_guard: f64,
    /// Multiplier on every J_ij, standing in for the unmodelled enhancement of χ.
    pub chi_calibration: f64,
}

impl Default for DressingSection {
    fn default() -> Self {
        Self {
            rabi_frequency_mhz: 1.9,
            detuning_mhz: 21.0,
            forster_defect_mhz: rydberg_ising::pair_potential::DEFAULT_FORSTER_DEFECT_MHZ,
            c3_mhz_um3: rydberg_ising::pair_potential::DEFAULT_C3_MHZ_UM3,
            pole_guard: 1e-3,
            chi_calibration: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Box,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudSection {
    pub geometry: GeometryKind,
    pub density_per_um3: f64,
    /// Box edge lengths; defaults to the cube holding `atoms` at the density.
    pub lengths_um: Option<[f64; 3]>,
    pub sigmas_um: [f64; 3],
    pub atoms: usize,
    pub exact_atoms: usize,
    pub max_exact_atoms: usize,
    pub boundary: BoundaryKind,
    pub cutoff_um: f64,
    pub temperature_uk: f64,
    pub seed: u64,
}

impl Default for CloudSection {
    fn default() -> Self {
        Self {
            geometry: GeometryKind::Box,
            density_per_um3: 0.14,
            lengths_um: None,
            sigmas_um: [50.0, 50.0, 50.0],
            atoms: 200,
            exact_atoms: 10,
            max_exact_atoms: rydberg_ising::spin_engine::DEFAULT_MAX_EXACT_ATOMS,
            boundary: BoundaryKind::Periodic,
            cutoff_um: 25.0,
            temperature_uk: 23.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub waist_um: f64,
    pub center_um: f64,
    /// Flat-top illumination for twist and Floquet runs.
    pub uniform: bool,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            waist_um: 80.0,
            center_um: 0.0,
            uniform: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSection {
    pub theta_points: usize,
    pub tau_r_us: Vec<f64>,
    pub alpha_points: usize,
    /// Atoms detected per fringe point; absent for noiseless fringes.
    pub shots: Option<usize>,
    pub cycles: usize,
    pub tau_x_us: f64,
    pub h_tau_x_rad: f64,
    pub echo: EchoPlacement,
}

impl Default for SequenceSection {
    fn default() -> Self {
        Self {
            theta_points: 16,
            tau_r_us: vec![10.0, 20.0, 30.0, 40.0],
            alpha_points: 21,
            shots: None,
            cycles: 4,
            tau_x_us: 1.0,
            h_tau_x_rad: 0.12,
            echo: EchoPlacement::EveryBlock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoherenceSection {
    pub contrast_decay_per_us: f64,
    pub atom_loss_per_us: f64,
}

impl Default for DecoherenceSection {
    fn default() -> Self {
        Self {
            contrast_decay_per_us: 0.0,
            atom_loss_per_us: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub r_min_um: f64,
    pub r_max_um: f64,
    pub points: usize,
    pub theta_rad: f64,
    pub methods: Vec<PotentialMethod>,
    pub mc_samples: usize,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            r_min_um: 0.5,
            r_max_um: 20.0,
            points: 200,
            theta_rad: 0.0,
            methods: vec![PotentialMethod::Exact, PotentialMethod::Softcore],
            mc_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloquetSection {
    pub tau_r_us: f64,
    pub lambda_eff: Vec<f64>,
    /// Initial states as [θ, φ] pairs in rad.
    pub initial_states_rad: Vec<[f64; 2]>,
    /// Extra cycles used to locate orbit centres.
    pub orbit_cycles: usize,
    pub flow_lines: usize,
    pub flow_duration: f64,
}

impl Default for FloquetSection {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            tau_r_us: 10.0,
            lambda_eff: vec![0.0, 1.2, 1.8, 2.7],
            initial_states_rad: vec![
                [0.15 * pi, 0.0],
                [0.3 * pi, 0.0],
                [0.5 * pi, 0.3],
                [0.7 * pi, 0.0],
                [0.85 * pi, 0.0],
            ],
            orbit_cycles: 120,
            flow_lines: 12,
            flow_duration: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifurcationSection {
    pub tau_r_us: f64,
    pub h_tau_x_rad: Vec<f64>,
    /// Contrast of the collective spin in every bin.
    pub contrast: f64,
    /// Peak Cχτ_R per cycle; when absent it follows from the cloud and beam.
    pub peak_twist_rad: Option<f64>,
    pub position_bins: usize,
    /// Half-width of the scanned region along the beam axis.
    pub half_width_um: f64,
    pub theta_points: usize,
    /// Positions of labelled cuts through the phase map.
    pub cuts_um: Vec<f64>,
}

impl Default for BifurcationSection {
    fn default() -> Self {
        Self {
            tau_r_us: 10.0,
            h_tau_x_rad: vec![0.0, 0.14],
            contrast: 1.0,
            peak_twist_rad: Some(0.28),
            position_bins: 41,
            half_width_um: 80.0,
            theta_points: 121,
            cuts_um: vec![0.0, 20.0, 35.0, 60.0],
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let d = &self.dressing;
        if !(d.chi_calibration > 0.0 && d.chi_calibration.is_finite()) {
            return bad("dressing.chi_calibration must be positive");
        }
        if !(d.pole_guard > 0.0) {
            return bad("dressing.pole_guard must be positive");
        }
        self.dressing_params()?;
        let c = &self.cloud;
        if !(c.density_per_um3 >= 0.0 && c.density_per_um3.is_finite()) {
            return bad("cloud.density_per_um3 must be ≥ 0");
        }
        if c.atoms == 0 || c.exact_atoms == 0 {
            return bad("cloud.atoms and cloud.exact_atoms must be ≥ 1");
        }
        if !(c.cutoff_um > 0.0) {
            return bad("cloud.cutoff_um must be positive");
        }
        if c.lengths_um.is_some_and(|l| l.iter().any(|v| !(*v > 0.0))) || c.sigmas_um.iter().any(|v| !(*v > 0.0)) {
            return bad("cloud dimensions must be positive");
        }
        if c.boundary == BoundaryKind::Periodic && c.geometry != GeometryKind::Box {
            return bad("periodic boundaries need box geometry");
        }
        if !(self.beam.waist_um > 0.0) {
            return bad("beam.waist_um must be positive");
        }
        let s = &self.sequence;
        if s.theta_points < 3 || s.alpha_points < 4 {
            return bad("sequence needs ≥ 3 θ points and ≥ 4 α points");
        }
        if s.tau_r_us.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || s.tau_r_us.is_empty() {
            return bad("sequence.tau_r_us must be nonempty and ≥ 0");
        }
        if s.shots == Some(0) {
            return bad("sequence.shots must be ≥ 1");
        }
        if !(s.tau_x_us >= 0.0) || !(s.h_tau_x_rad >= 0.0 && s.h_tau_x_rad < std::f64::consts::FRAC_PI_2) {
            return bad("sequence.h_tau_x_rad must lie in [0, π/2) and tau_x_us ≥ 0");
        }
        let dec = &self.decoherence;
        if !(dec.contrast_decay_per_us >= 0.0 && dec.atom_loss_per_us >= 0.0) {
            return bad("decoherence rates must be ≥ 0");
        }
        let p = &self.potential;
        if !(p.r_min_um > 0.0 && p.r_max_um > p.r_min_um) || p.points < 2 {
            return bad("potential needs 0 < r_min_um < r_max_um and ≥ 2 points");
        }
        if p.mc_samples < 2 {
            return bad("potential.mc_samples must be ≥ 2");
        }
        let f = &self.floquet;
        if f.lambda_eff.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad("floquet.lambda_eff values must be ≥ 0");
        }
        if f.initial_states_rad.iter().any(|s| !(s[0] >= 0.0 && s[0] <= std::f64::consts::PI)) {
            return bad("floquet initial θ must lie in [0, π]");
        }
        if !(f.tau_r_us > 0.0) || f.flow_duration < 0.0 {
            return bad("floquet.tau_r_us must be positive and flow_duration ≥ 0");
        }
        let b = &self.bifurcation;
        if !(b.tau_r_us > 0.0) || !(b.contrast >= 0.0 && b.contrast <= 1.0) {
            return bad("bifurcation needs tau_r_us > 0 and contrast in [0, 1]");
        }
        if b.position_bins < 2 || b.theta_points < 3 || !(b.half_width_um > 0.0) {
            return bad("bifurcation needs ≥ 2 bins, ≥ 3 θ points and a positive half width");
        }
        if b.h_tau_x_rad.iter().any(|h| !(*h >= 0.0 && *h < std::f64::consts::FRAC_PI_2)) {
            return bad("bifurcation.h_tau_x_rad values must lie in [0, π/2)");
        }
        if b.peak_twist_rad.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return bad("bifurcation.peak_twist_rad must be ≥ 0");
        }
        Ok(())
    }

    pub fn dressing_params(&self) -> Result<DressingParams64, CliError> {
        let d = &self.dressing;
        let mut p = DressingParams::new(
            mhz_to_angular(d.rabi_frequency_mhz),
            mhz_to_angular(d.detuning_mhz),
            mhz_to_angular(d.forster_defect_mhz),
            mhz_to_angular(d.c3_mhz_um3),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        p.pole_guard = d.pole_guard;
        Ok(p)
    }

    pub fn geometry(&self, atoms: usize) -> Geometry<f64> {
        let c = &self.cloud;
        match c.geometry {
            GeometryKind::Box => match c.lengths_um {
                Some(lengths) => Geometry::Box { lengths },
                None => Geometry::cube_for(atoms, c.density_per_um3),
            },
            GeometryKind::Gaussian => Geometry::GaussianEllipsoid { sigmas: c.sigmas_um },
        }
    }

    pub fn boundary(&self) -> Boundary<f64> {
        match self.cloud.boundary {
            BoundaryKind::Open => Boundary::Open,
            BoundaryKind::Periodic => Boundary::Periodic {
                cutoff: self.cloud.cutoff_um,
            },
        }
    }

    pub fn decoherence_model(&self) -> DecoherenceModel<f64> {
        DecoherenceModel {
            contrast_decay_rate: self.decoherence.contrast_decay_per_us,
            atom_loss_rate: self.decoherence.atom_loss_per_us,
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        theta_grid(self.sequence.theta_points)
    }

    pub fn alphas(&self) -> Vec<f64> {
        let n = self.sequence.alpha_points;
        (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect()
    }
}

/// Midpoint grid on (0, π), avoiding the poles where the phase is undefined.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| std::f64::consts::PI * (k as f64 + 0.5) / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml("[dressing]\nrabi_mhz = 2.0\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml("[dressing]\ndetuning_mhz = 0.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[sequence]\ntheta_points = 2\n").is_err());
    }

    #[test]
    fn units_convert() {
        let cfg = ExperimentConfig::from_toml("[dressing]\nrabi_frequency_mhz = 1.0\n").unwrap();
        let p = cfg.dressing_params().unwrap();
        assert!((p.rabi_frequency - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
