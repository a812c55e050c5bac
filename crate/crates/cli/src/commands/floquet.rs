//! Floquet trajectories of the collective spin, orbit centres and the
//! continuous mean-field flow for comparison.

use rydberg_ising::floquet::{fixed_points, Stability};
use rydberg_ising::numerics::symmetric_eigen;
use rydberg_ising::spin_engine::{
    build_floquet_sequence, flow_line, BackendKind, CollectiveBackend, EchoPlacement, ExactBackend,
    MeanFieldBackend, SpinBackend,
};
use rydberg_ising::Vec3f64;
use serde::Serialize;

use super::build_ensemble;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{row, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrobePoint {
    pub cycle: usize,
    /// S/(CS) in the toggling frame.
    pub direction: [f64; 3],
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub theta: f64,
    pub phi: f64,
    pub trajectory: Vec<StrobePoint>,
    pub center: [f64; 3],
    pub nearest_prediction: [f64; 3],
    pub nearest_stability: Stability,
    pub distance: f64,
    /// The orbit stays in one hemisphere (s_z of fixed sign), circling a
    /// single ferromagnetic point.
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetRun {
    /// Requested Λ_eff, realised by setting χ with C = 1.
    pub lambda_target: f64,
    /// C·χτ_R/(hτ_X) with C the mean contrast after the short run.
    pub lambda_eff: f64,
    /// Mean 1/s_x of the centres of one-sided orbits.
    pub lambda_fitted: Option<f64>,
    pub orbits: Vec<Orbit>,
    #[serde(skip)]
    pub flow: Vec<Vec<Vec3f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetReport {
    pub backend: BackendKind,
    pub tau_r_us: f64,
    pub h_tau_x_rad: f64,
    pub runs: Vec<FloquetRun>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<FloquetReport, CliError> {
    let f = &cfg.floquet;
    let s = &cfg.sequence;
    let tau_r = f.tau_r_us;
    let tau_x = s.tau_x_us;
    let angle = s.h_tau_x_rad;
    if !(angle > 0.0) || !(tau_x > 0.0) {
        return Err(CliError::Config("floquet runs need h_tau_x_rad > 0 and tau_x_us > 0".into()));
    }
    let h = angle / tau_x;
    let mut runs = Vec::with_capacity(f.lambda_eff.len());
    for &lambda in &f.lambda_eff {
        let chi = lambda * angle / tau_r;
        let engine = make_engine(cfg, chi, tau_r)?;
        let predicted = fixed_points(lambda);
        let mut orbits = Vec::with_capacity(f.initial_states_rad.len());
        for &[theta, phi] in &f.initial_states_rad {
            let short = strobe(&engine, theta, phi, s.cycles, tau_r, tau_x, h, s.echo)?;
            let long = if f.orbit_cycles > s.cycles {
                strobe(&engine, theta, phi, f.orbit_cycles, tau_r, tau_x, h, s.echo)?
            } else {
                short.clone()
            };
            let dirs: Vec<Vec3f64> = long.iter().map(|p| Vec3f64::from_array(p.direction)).collect();
            let center = orbit_center(&dirs);
            let one_sided = dirs.iter().all(|d| d.z > 0.0) || dirs.iter().all(|d| d.z < 0.0);
            let (near, dist) = predicted
                .points
                .iter()
                .map(|p| (p, p.direction.distance(&center)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one fixed point");
            orbits.push(Orbit {
                theta,
                phi,
                trajectory: short,
                center: center.to_array(),
                nearest_prediction: near.direction.to_array(),
                nearest_stability: near.stability,
                distance: dist,
                one_sided,
            });
        }
        let contrast = mean(orbits.iter().map(|o| o.trajectory.last().map_or(1.0, |p| p.contrast)));
        let off_axis: Vec<f64> = orbits
            .iter()
            .filter(|o| o.one_sided && o.center[0] > 0.0)
            .map(|o| 1.0 / o.center[0])
            .collect();
        let lambda_fitted = (!off_axis.is_empty()).then(|| mean(off_axis.iter().copied()));
        let flow = (0..f.flow_lines)
            .map(|j| {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / f.flow_lines as f64;
                flow_line(lambda, Vec3f64::from_polar(theta, 0.0), f.flow_duration, 200)
            })
            .collect::<Result<Vec<_>, _>>()?;
        runs.push(FloquetRun {
            lambda_target: lambda,
            lambda_eff: contrast * lambda,
            lambda_fitted,
            orbits,
            flow,
        });
    }
    Ok(FloquetReport {
        backend: cfg.backend,
        tau_r_us: tau_r,
        h_tau_x_rad: angle,
        runs,
    })
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Backend plus the way stroboscopic samples are taken from it.
pub enum Engine {
    /// Mean-field spins are carried from one single-cycle sequence to the next.
    MeanField(MeanFieldBackend<f64>),
    /// Every sample is a fresh k-cycle run from the initial product state.
    Prefix(Box<dyn SpinBackend<f64>>),
}

pub fn make_engine(cfg: &ExperimentConfig, chi: f64, tau_r: f64) -> Result<Engine, CliError> {
    let scaled = |atoms: usize| -> Result<_, CliError> {
        let e = build_ensemble(cfg, atoms, true)?;
        let base = e.model.couplings.mean_chi();
        if chi != 0.0 && base == 0.0 {
            return Err(CliError::Config(format!(
                "cannot reach χτ_R = {} with a non-interacting cloud",
                chi * tau_r
            )));
        }
        let factor = if chi == 0.0 { 0.0 } else { chi / base };
        let mut model = e.model;
        model.couplings = model.couplings.scaled(factor);
        Ok(model)
    };
    Ok(match cfg.backend {
        BackendKind::Collective => Engine::Prefix(Box::new(CollectiveBackend::new(chi, 1.0))),
        BackendKind::MeanField => {
            Engine::MeanField(MeanFieldBackend::new(scaled(cfg.cloud.atoms)?, cfg.decoherence_model()))
        }
        BackendKind::Exact => Engine::Prefix(Box::new(ExactBackend::with_limit(
            scaled(cfg.cloud.exact_atoms)?,
            cfg.decoherence_model(),
            cfg.cloud.max_exact_atoms,
        )?)),
    })
}

/// Toggling-frame mean spin after n = 0..=cycles complete Floquet cycles.
/// Samples sit at the end of a (half) dressing block, where the echoes
/// have cancelled the single-particle terms.
#[allow(clippy::too_many_arguments)]
pub fn strobe(
    engine: &Engine,
    theta: f64,
    phi: f64,
    cycles: usize,
    tau_r: f64,
    tau_x: f64,
    h: f64,
    echo: EchoPlacement,
) -> Result<Vec<StrobePoint>, CliError> {
    let point = |cycle: usize, m: Vec3f64| {
        let c = m.norm();
        let d = if c > 0.0 { m * (1.0 / c) } else { m };
        StrobePoint {
            cycle,
            direction: d.to_array(),
            contrast: c,
        }
    };
    let mut points = Vec::with_capacity(cycles + 1);
    match engine {
        Engine::MeanField(b) => {
            let one = build_floquet_sequence(theta, phi, 1, tau_r, tau_x, h, echo);
            let mut spins = vec![one.initial.bloch(); b.model.len()];
            let mut m = one.initial.bloch();
            points.push(point(0, m));
            for n in 1..=cycles {
                let out = b.evolve_from(spins, &one)?;
                m = out.toggling_frame();
                spins = if out.echo_count % 2 == 1 {
                    out.spins.iter().map(|s| s.flipped_x()).collect()
                } else {
                    out.spins
                };
                points.push(point(n, m));
            }
        }
        Engine::Prefix(b) => {
            for n in 0..=cycles {
                let out = b.evolve(&build_floquet_sequence(theta, phi, n, tau_r, tau_x, h, echo))?;
                points.push(point(n, out.toggling_frame()));
            }
        }
    }
    Ok(points)
}

/// Centre of a closed orbit on the unit sphere: the normal of the plane the
/// orbit lies in, oriented towards the orbit.
pub fn orbit_center(points: &[Vec3f64]) -> Vec3f64 {
    let n = points.len().max(1) as f64;
    let c = points.iter().fold(Vec3f64::zero(), |a, p| a + *p) * (1.0 / n);
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - c).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let (vals, vecs) = symmetric_eigen(cov);
    if vals[2] < 1e-18 {
        return c.normalized();
    }
    let normal = Vec3f64::new(vecs[0][0], vecs[0][1], vecs[0][2]).normalized();
    if normal.dot(&c) < 0.0 {
        -normal
    } else {
        normal
    }
}

pub fn tables(report: &FloquetReport) -> Vec<Table> {
    let mut traj = String::from("# lambda_target\tstate\tcycle\tSx\tSy\tSz\tC\n");
    let mut orbits = String::from("# lambda_target\tstate\tcx\tcy\tcz\tpx\tpy\tpz\tdistance\n");
    let mut flow = String::from("# lambda_target\tline\tsample\tsx\tsy\tsz\n");
    for r in &report.runs {
        for (i, o) in r.orbits.iter().enumerate() {
            for p in &o.trajectory {
                let d = p.direction;
                traj.push_str(&row(&[r.lambda_target, i as f64, p.cycle as f64, d[0], d[1], d[2], p.contrast]));
            }
            let (c, q) = (o.center, o.nearest_prediction);
            orbits.push_str(&row(&[r.lambda_target, i as f64, c[0], c[1], c[2], q[0], q[1], q[2], o.distance]));
        }
        for (j, line) in r.flow.iter().enumerate() {
            for (k, s) in line.iter().enumerate() {
                flow.push_str(&row(&[r.lambda_target, j as f64, k as f64, s.x, s.y, s.z]));
            }
        }
    }
    vec![
        Table::new("floquet_trajectories.tsv", traj),
        Table::new("floquet_orbits.tsv", orbits),
        Table::new("floquet_flow.tsv", flow),
    ]
}
