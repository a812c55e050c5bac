use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydberg_ising::cloud::{coupling_matrix, sample_cloud, BeamProfile, Boundary, CouplingMatrix, Geometry};
use rydberg_ising::pair_potential::DressingParams;
use rydberg_ising::spin_engine::{
    build_floquet_sequence, build_spin_echo_sequence, fringe_probability, simulate_fringe, CollectiveBackend,
    DecoherenceModel, EchoPlacement, ExactBackend, InitialState, IsingModel, MeanFieldBackend, PulseSequence,
    SpinBackend, StateVector,
};
use rydberg_ising::{Vec3f64, DressingParams64};

fn random_couplings(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CouplingMatrix<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let x = -scale * rng.random::<f64>();
            v[i * n + j] = x;
            v[j * n + i] = x;
        }
    }
    let shifts = (0..n).map(|_| 0.3 * (rng.random::<f64>() - 0.5)).collect();
    CouplingMatrix::from_dense(n, v, shifts).unwrap()
}

/// Transverse Bloch component b_x + i b_y of spin i under H = Σ J s^z s^z + Σ h s^z
/// from the product state |θ, φ⟩: every other spin contributes an independent
/// phase e^{∓iJt/2} weighted by its up/down populations.
fn product_formula(m: &CouplingMatrix<f64>, h: &[f64], theta: f64, phi: f64, t: f64, i: usize) -> Complex64 {
    let up = (theta / 2.0).cos().powi(2);
    let down = 1.0 - up;
    let mut z = Complex64::from_polar(theta.sin(), phi - h[i] * t);
    for j in 0..m.len() {
        if j != i {
            let a = m.get(i, j) * t / 2.0;
            z *= Complex64::from_polar(up, -a) + Complex64::from_polar(down, a);
        }
    }
    z
}

#[test]
fn exact_backend_matches_ising_product_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let n = 8;
        let m = random_couplings(&mut rng, n, 0.2);
        let theta = PI * rng.random::<f64>();
        let phi = 2.0 * PI * rng.random::<f64>();
        let t = 60.0 * rng.random::<f64>();
        let h: Vec<f64> = (0..n).map(|i| 0.5 * m.row_sum(i) + m.light_shifts[i]).collect();
        let backend = ExactBackend::new(IsingModel::new(m.clone(), true), DecoherenceModel::none()).unwrap();
        let out = backend.evolve(&PulseSequence::new(InitialState::new(theta, phi)).dress(t)).unwrap();
        for i in 0..n {
            let z = product_formula(&m, &h, theta, phi, t, i);
            let b = out.spins[i];
            assert!((b.x - z.re).abs() < 1e-10 && (b.y - z.im).abs() < 1e-10, "spin {i}: {b:?} vs {z}");
            assert!((b.z - theta.cos()).abs() < 1e-10);
        }
    }
}

#[test]
fn echo_coherence_is_product_of_cosines() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = 8;
        let m = random_couplings(&mut rng, n, 0.2);
        let tau = 60.0 * rng.random::<f64>();
        let backend = ExactBackend::new(IsingModel::new(m.clone(), true), DecoherenceModel::none()).unwrap();
        let out = backend.evolve(&build_spin_echo_sequence(FRAC_PI_2, tau, 0.0)).unwrap();
        for i in 0..n {
            let oracle: f64 = (0..n).filter(|&j| j != i).map(|j| (m.get(i, j) * tau / 2.0).cos().abs()).product();
            assert!((out.spins[i].transverse() - oracle).abs() < 1e-10);
        }
    }
}

#[test]
fn echo_cancels_linear_terms_and_light_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let m = random_couplings(&mut rng, 8, 0.1);
        let theta = PI * rng.random::<f64>();
        let tau = 80.0 * rng.random::<f64>();
        let with = ExactBackend::new(IsingModel::new(m.clone(), true), DecoherenceModel::none()).unwrap();
        let without =
            ExactBackend::new(IsingModel::new(m.without_light_shifts(), false), DecoherenceModel::none()).unwrap();
        for seq in [
            build_spin_echo_sequence(theta, tau, 0.4),
            build_floquet_sequence(theta, 0.2, 4, tau / 4.0, 1.0, 0.12, EchoPlacement::EveryBlock),
        ] {
            let a = with.evolve(&seq).unwrap();
            let b = without.evolve(&seq).unwrap();
            for (x, y) in a.spins.iter().zip(&b.spins) {
                assert!(x.distance(y) < 1e-10);
            }
            assert!((a.readout_probability.unwrap_or(0.0) - b.readout_probability.unwrap_or(0.0)).abs() < 1e-10);
        }
    }
}

fn cloud_model(n: usize, seed: u64, target_twist: f64, tau: f64) -> IsingModel<f64> {
    let p: DressingParams64 = DressingParams::operating_point();
    let cloud = sample_cloud(Geometry::cube_for(n, 0.14), 0.14, Some(n), seed).unwrap();
    let beam = BeamProfile::uniform(p.rabi_frequency).unwrap();
    let m = coupling_matrix(&cloud, &beam, &p, Boundary::Periodic { cutoff: 25.0 }).unwrap();
    let factor = target_twist / (m.mean_chi() * tau);
    IsingModel::new(m.scaled(factor), true)
}

#[test]
fn exact_and_meanfield_agree_at_small_twist() {
    for seed in 0..5 {
        let tau = 20.0;
        let model = cloud_model(10, seed, 0.3, tau);
        let exact = ExactBackend::new(model.clone(), DecoherenceModel::none()).unwrap();
        let mf = MeanFieldBackend::new(model, DecoherenceModel::none());
        for k in 0..12 {
            let theta = PI * (k as f64 + 0.5) / 12.0;
            let seq = build_spin_echo_sequence(theta, tau, 0.0);
            let a = exact.evolve(&seq).unwrap().mean();
            let b = mf.evolve(&seq).unwrap().mean();
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 0.05, "seed {seed} θ {theta}: {a:?} vs {b:?}");
            }
        }
    }
}

#[test]
fn meanfield_uniform_couplings_reduce_to_collective_spin() {
    let n = 10;
    let j = -0.004;
    let m = CouplingMatrix::uniform(n, j);
    let chi = -0.5 * (n as f64 - 1.0) * j;
    let mf = MeanFieldBackend::new(IsingModel::new(m, true), DecoherenceModel::none());
    let col = CollectiveBackend::new(chi, 1.0);
    for theta in [0.3, 1.0, 2.0, 2.8] {
        for seq in [
            build_spin_echo_sequence(theta, 40.0, 0.0),
            build_floquet_sequence(theta, 0.0, 4, 10.0, 1.0, 0.12, EchoPlacement::EveryBlock),
        ] {
            let a = mf.evolve(&seq).unwrap();
            let b = col.evolve(&seq).unwrap();
            assert!(a.mean().distance(&b.mean()) < 1e-6);
        }
    }
}

#[test]
fn two_spin_meanfield_echo_phase() {
    let j = -0.01;
    let m = CouplingMatrix::uniform(2, j).with_light_shifts(vec![0.05, -0.02]).unwrap();
    let mf = MeanFieldBackend::new(IsingModel::new(m, true), DecoherenceModel::none());
    for theta in [0.4_f64, 1.2, 2.5] {
        let tau = 30.0;
        let out = mf.evolve(&build_spin_echo_sequence(theta, tau, 0.0)).unwrap();
        // Each half accumulates −(J z/2)(τ/2) about ẑ; the echo negates both
        // the accumulated phase and z, so the halves add.
        let oracle = j * theta.cos() * tau / 2.0;
        assert!((out.phase() - oracle).abs() < 1e-12);
        assert!((out.contrast() - theta.sin().hypot(theta.cos())).abs() < 1e-12);
    }
}

#[test]
fn floquet_without_drive_is_spin_echo() {
    let model = cloud_model(8, 3, 0.8, 40.0);
    let backends: Vec<Box<dyn SpinBackend<f64>>> = vec![
        Box::new(ExactBackend::new(model.clone(), DecoherenceModel::none()).unwrap()),
        Box::new(MeanFieldBackend::new(model, DecoherenceModel::none())),
        Box::new(CollectiveBackend::new(0.02, 0.9)),
    ];
    for b in &backends {
        for theta in [0.2, 1.3, 2.9] {
            let f = b.evolve(&build_floquet_sequence(theta, 0.0, 4, 10.0, 1.0, 0.0, EchoPlacement::EveryBlock)).unwrap();
            let e = b.evolve(&build_spin_echo_sequence(theta, 40.0, 0.0)).unwrap();
            assert!(f.echo_frame().distance(&e.echo_frame()) < 1e-10, "{}", b.name());
            assert!((f.phase() - e.phase()).abs() < 1e-10);
        }
    }
}

#[test]
fn norms_are_conserved() {
    let model = cloud_model(10, 1, 2.0, 30.0);
    let exact = ExactBackend::new(model.clone(), DecoherenceModel::none()).unwrap();
    let seq = build_floquet_sequence(1.1, 0.3, 6, 5.0, 1.0, 0.3, EchoPlacement::EveryBlock);
    let mf = MeanFieldBackend::new(model.clone(), DecoherenceModel::none()).evolve(&seq).unwrap();
    for s in &mf.spins {
        assert!((s.norm() - 1.0).abs() < 1e-9);
    }
    let mut psi = StateVector::product(10, &InitialState::new(1.1, 0.3));
    for _ in 0..20 {
        psi.apply_diagonal(exact.energies(), 3.0);
        psi.rotate_all(0.4, 0.7);
    }
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn single_spin_ramsey_algebra() {
    let m = CouplingMatrix::uniform(1, 0.0).with_light_shifts(vec![0.25]).unwrap();
    let b = ExactBackend::new(IsingModel::new(m, true), DecoherenceModel::none()).unwrap();
    let t = 3.0;
    let out = b.evolve(&PulseSequence::new(InitialState::new(FRAC_PI_2, 0.0)).dress(t)).unwrap();
    let s = out.spins[0];
    assert!((s.x - (0.25 * t).cos()).abs() < 1e-12);
    assert!((s.y + (0.25 * t).sin()).abs() < 1e-12);
    let out = b
        .evolve(&PulseSequence::new(InitialState::new(0.0, 0.0)).rotate(FRAC_PI_2, FRAC_PI_2))
        .unwrap();
    let s = out.spins[0];
    assert!(s.distance(&Vec3f64::new(1.0, 0.0, 0.0)) < 1e-12, "{s:?}");
}

#[test]
fn free_spins_only_see_pulses() {
    let m = CouplingMatrix::uniform(4, 0.0);
    let seq = build_floquet_sequence(0.7, 0.1, 3, 10.0, 1.0, 0.2, EchoPlacement::EveryBlock);
    let out = MeanFieldBackend::new(IsingModel::new(m, true), DecoherenceModel::none()).evolve(&seq).unwrap();
    let expected = Vec3f64::from_polar(0.7, 0.1).rotated_x(0.6);
    assert!(out.toggling_frame().distance(&expected) < 1e-12);

    let k1 = build_floquet_sequence(0.7, 0.1, 1, 0.0, 1.0, 0.2, EchoPlacement::EveryBlock);
    let out = CollectiveBackend::new(0.05, 1.0).evolve(&k1).unwrap();
    assert!(out.toggling_frame().distance(&Vec3f64::from_polar(0.7, 0.1).rotated_x(0.2)) < 1e-12);
}

#[test]
fn echo_without_dressing_and_polar_states() {
    let model = cloud_model(10, 2, 1.0, 20.0);
    let mf = MeanFieldBackend::new(model, DecoherenceModel::none());
    for k in 0..8 {
        let theta = PI * (k as f64 + 0.5) / 8.0;
        let out = mf.evolve(&build_spin_echo_sequence(theta, 0.0, 0.0)).unwrap();
        assert!(out.phase().abs() < 1e-12);
        assert!((out.contrast() - 1.0).abs() < 1e-12);
    }
    let out = mf.evolve(&build_spin_echo_sequence(0.0, 20.0, 0.0)).unwrap();
    let f = simulate_fringe(&out.echo_frame(), &[0.0, 1.0, 2.0, 3.0], None, 0).unwrap();
    assert!(f.p_up.iter().all(|p| (p - 0.5).abs() < 1e-12));
}

#[test]
fn decoherence_shrinks_contrast_and_population() {
    let dec = DecoherenceModel {
        contrast_decay_rate: 0.01,
        atom_loss_rate: 0.004,
    };
    let m = CouplingMatrix::uniform(6, 0.0);
    let seq = build_spin_echo_sequence(FRAC_PI_2, 30.0, 0.0);
    for b in [
        Box::new(MeanFieldBackend::new(IsingModel::new(m.clone(), true), dec)) as Box<dyn SpinBackend<f64>>,
        Box::new(ExactBackend::new(IsingModel::new(m.clone(), true), dec).unwrap()),
    ] {
        let out = b.evolve(&seq).unwrap();
        assert!((out.contrast() - (-0.3f64).exp()).abs() < 1e-12, "{}", b.name());
        assert!((out.surviving_fraction - (-0.12f64).exp()).abs() < 1e-12);
    }
}

#[test]
fn fringe_limits() {
    let up = Vec3f64::new(1.0, 0.0, 0.0);
    assert!((fringe_probability(&up, 0.0) - 1.0).abs() < 1e-15);
    assert!(fringe_probability(&up, PI).abs() < 1e-15);
    assert!((fringe_probability(&Vec3f64::zero(), 1.3) - 0.5).abs() < 1e-15);
    assert!(simulate_fringe(&up, &[0.0], Some(0), 1).is_err());
}

#[test]
fn capacity_limit_enforced() {
    let m = CouplingMatrix::uniform(16, -0.001);
    let err = ExactBackend::new(IsingModel::new(m, true), DecoherenceModel::none()).unwrap_err();
    assert!(matches!(err, rydberg_ising::Error::Capacity { atoms: 16, .. }));
}

#[test]
fn peak_phase_with_calibration() {
    let p: DressingParams64 = DressingParams::operating_point();
    let cloud = sample_cloud(Geometry::cube_for(200, 0.14), 0.14, Some(200), 42).unwrap();
    let beam = BeamProfile::uniform(p.rabi_frequency).unwrap();
    let m = coupling_matrix(&cloud, &beam, &p, Boundary::Periodic { cutoff: 25.0 }).unwrap().scaled(3.5);
    let mf = MeanFieldBackend::new(IsingModel::new(m, true), DecoherenceModel::none());
    let out = mf.evolve(&build_spin_echo_sequence(0.75 * PI, 40.0, 0.0)).unwrap();
    assert!((out.phase() - 2.6).abs() < 0.26, "peak phase {}", out.phase());
}
