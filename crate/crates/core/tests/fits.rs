use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rydberg_ising::analysis::unwrap_along_theta;
use rydberg_ising::spin_engine::simulate_fringe;
use rydberg_ising::{fit_chi, fit_fringe, fit_twisting, wrap_phase, Vec3f64};

fn alphas(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

#[test]
fn shot_noise_errors_are_calibrated() {
    let a = alphas(16);
    let truth = Vec3f64::new(0.62 * 0.4f64.cos(), 0.62 * 0.4f64.sin(), 0.0);
    let trials = 1000;
    let (mut phase_ok, mut contrast_ok) = (0, 0);
    for seed in 0..trials {
        let f = simulate_fringe(&truth, &a, Some(500), seed).unwrap();
        let fit = fit_fringe(&a, &f.p_up, Some(500)).unwrap();
        let c = fit.get("contrast").unwrap();
        let p = fit.get("phase").unwrap();
        if (c.value - 0.62).abs() <= 3.0 * c.stderr {
            contrast_ok += 1;
        }
        if wrap_phase(p.value - 0.4).abs() <= 3.0 * p.stderr {
            phase_ok += 1;
        }
    }
    assert!(phase_ok as f64 >= 0.99 * trials as f64, "phase {phase_ok}/{trials}");
    assert!(contrast_ok as f64 >= 0.99 * trials as f64, "contrast {contrast_ok}/{trials}");
}

#[test]
fn shot_noise_is_deterministic_per_seed() {
    let a = alphas(16);
    let m = Vec3f64::new(0.5, 0.1, 0.0);
    let x = simulate_fringe(&m, &a, Some(200), 17).unwrap();
    let y = simulate_fringe(&m, &a, Some(200), 17).unwrap();
    let z = simulate_fringe(&m, &a, Some(200), 18).unwrap();
    assert_eq!(x, y);
    assert_ne!(x, z);
    assert!(x.p_up.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn twisting_fit_with_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let th: Vec<f64> = (0..16).map(|k| PI * (k as f64 + 0.5) / 16.0).collect();
    let q = 2.6;
    let phi: Vec<f64> = th.iter().map(|t| wrap_phase(-q * t.cos() + noise.sample(&mut rng))).collect();
    let fit = fit_twisting(&th, &phi, false).unwrap();
    let est = fit.get("q").unwrap();
    assert!((est.value - q).abs() < 4.0 * est.stderr, "{} ± {}", est.value, est.stderr);
    assert!(fit.r_squared > 0.99);
}

#[test]
fn unwrap_recovers_large_twist() {
    let th: Vec<f64> = (0..32).map(|k| PI * (k as f64 + 0.5) / 32.0).collect();
    let phi: Vec<f64> = th.iter().map(|t| wrap_phase(-5.0 * t.cos())).collect();
    let un = unwrap_along_theta(&th, &phi);
    for (u, t) in un.iter().zip(&th) {
        assert!((u + 5.0 * t.cos()).abs() < 1e-12);
    }
}

#[test]
fn chi_fit_slope_and_errors() {
    let tau = [10.0, 20.0, 30.0, 40.0];
    let chi = 0.094;
    let q: Vec<f64> = tau.iter().map(|t| chi * t + 0.01).collect();
    let fit = fit_chi(&tau, &q, None).unwrap();
    assert!((fit.value("chi").unwrap() - chi).abs() < 1e-12);
    assert!((fit.value("intercept").unwrap() - 0.01).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sigma = [0.02, 0.03, 0.04, 0.05];
    let mut pulls = Vec::new();
    for _ in 0..400 {
        let noisy: Vec<f64> = tau
            .iter()
            .zip(&sigma)
            .map(|(t, s)| chi * t + s * Normal::new(0.0, 1.0).unwrap().sample(&mut rng))
            .collect();
        let f = fit_chi(&tau, &noisy, Some(&sigma)).unwrap();
        let e = f.get("chi").unwrap();
        pulls.push((e.value - chi) / e.stderr);
    }
    let var = pulls.iter().map(|p| p * p).sum::<f64>() / pulls.len() as f64;
    assert!((var - 1.0).abs() < 0.2, "pull variance {var}");

    let two = fit_chi(&[10.0_f64, 20.0], &[0.9, 1.8], None).unwrap();
    assert!(two.stderr("chi").unwrap().is_infinite());
    assert!(fit_chi(&[10.0, 10.0, 10.0], &[0.9, 1.0, 1.1], None).is_err());
}

#[test]
fn fringe_fit_handles_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let a: Vec<f64> = (0..9).map(|k| 2.0 * PI * (k as f64 + rng.random::<f64>()) / 9.0).collect();
        let c = 0.1 + 0.9 * rng.random::<f64>();
        let phi = PI * (2.0 * rng.random::<f64>() - 1.0);
        let p: Vec<f64> = a.iter().map(|x| 0.5 * (1.0 + c * (x - phi).cos())).collect();
        let fit = fit_fringe(&a, &p, None).unwrap();
        assert!((fit.value("contrast").unwrap() - c).abs() < 1e-9);
        assert!(wrap_phase(fit.value("phase").unwrap() - phi).abs() < 1e-9);
    }
}
