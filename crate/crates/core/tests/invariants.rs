use std::f64::consts::PI;

use proptest::prelude::*;
use rydberg_ising::cloud::{coupling_matrix, sample_cloud, BeamProfile, Boundary, CouplingMatrix, Geometry};
use rydberg_ising::floquet::{bifurcation_scan, fixed_points, ThresholdMode};
use rydberg_ising::pair_potential::{dressed_interaction_softcore, softcore_shape};
use rydberg_ising::spin_engine::{
    build_floquet_sequence, build_spin_echo_sequence, fringe_probability, simulate_fringe, CollectiveMap,
    DecoherenceModel, EchoPlacement, ExactBackend, IsingModel, MeanFieldBackend, SpinBackend,
};
use rydberg_ising::{fit_fringe, wrap_phase, DressingParams64, Vec3f64};

fn couplings(n: usize, values: &[f64], shifts: &[f64]) -> CouplingMatrix<f64> {
    let mut v = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            v[i * n + j] = values[k];
            v[j * n + i] = values[k];
            k += 1;
        }
    }
    CouplingMatrix::from_dense(n, v, shifts[..n].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn softcore_shape_is_a_fraction_below_the_plateau(v in -1e6f64..-1e-6) {
        let p = DressingParams64::operating_point();
        let s = softcore_shape(v, &p).unwrap();
        prop_assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn softcore_decays_monotonically(r1 in 0.3f64..30.0, dr in 0.01f64..10.0) {
        let p = DressingParams64::operating_point();
        let a = dressed_interaction_softcore(r1, 0.0, &p).unwrap();
        let b = dressed_interaction_softcore(r1 + dr, 0.0, &p).unwrap();
        prop_assert!(b.abs() <= a.abs());
        prop_assert!(a.abs() <= p.blockade_plateau().abs() * (1.0 + 1e-12));
        prop_assert!(a * p.blockade_plateau() >= 0.0);
    }

    #[test]
    fn coupling_matrix_is_symmetric_and_bounded(seed in 0u64..1000, n in 2usize..30, uniform in any::<bool>()) {
        let p = DressingParams64::operating_point();
        let cloud = sample_cloud(Geometry::cube_for(n, 0.14), 0.14, Some(n), seed).unwrap();
        let beam = if uniform {
            BeamProfile::uniform(p.rabi_frequency).unwrap()
        } else {
            BeamProfile::new(p.rabi_frequency, 5.0, 0.0).unwrap()
        };
        let m = coupling_matrix(&cloud, &beam, &p, Boundary::Open).unwrap();
        let j0 = p.blockade_plateau();
        for i in 0..n {
            prop_assert_eq!(m.get(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
                prop_assert!(m.get(i, j) * j0 >= 0.0);
                prop_assert!(m.get(i, j).abs() <= j0.abs() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn meanfield_preserves_spin_length(
        values in prop::collection::vec(-0.05f64..0.0, 15),
        shifts in prop::collection::vec(-0.2f64..0.2, 6),
        theta in 0.0f64..PI,
        phi in -PI..PI,
        tau in 0.0f64..20.0,
        h in 0.0f64..0.5,
    ) {
        let m = couplings(6, &values, &shifts);
        let b = MeanFieldBackend::new(IsingModel::new(m, true), DecoherenceModel::none());
        let out = b.evolve(&build_floquet_sequence(theta, phi, 3, tau, 1.0, h, EchoPlacement::EveryBlock)).unwrap();
        for s in &out.spins {
            prop_assert!((s.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn echo_output_ignores_linear_shifts(
        values in prop::collection::vec(-0.05f64..0.0, 10),
        shifts in prop::collection::vec(-0.3f64..0.3, 5),
        theta in 0.0f64..PI,
        tau in 0.0f64..50.0,
    ) {
        let m = couplings(5, &values, &shifts);
        let seq = build_spin_echo_sequence(theta, tau, 0.0);
        let with = ExactBackend::new(IsingModel::new(m.clone(), true), DecoherenceModel::none()).unwrap();
        let without = ExactBackend::new(IsingModel::new(m.without_light_shifts(), false), DecoherenceModel::none()).unwrap();
        let a = with.evolve(&seq).unwrap();
        let b = without.evolve(&seq).unwrap();
        prop_assert!(a.mean().distance(&b.mean()) < 1e-10);
        for s in &a.spins {
            prop_assert!(s.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn collective_map_is_norm_preserving_and_flip_symmetric(
        twist in 0.0f64..1.0, rot in 0.0f64..1.0, theta in 0.0f64..PI, phi in -PI..PI,
    ) {
        let map = CollectiveMap::new(twist, rot, 1.0);
        let s = Vec3f64::from_polar(theta, phi);
        let m = map.apply(&s);
        prop_assert!((m.norm() - 1.0).abs() < 1e-12);
        prop_assert!(map.apply(&s.flipped_x()).distance(&m.flipped_x()) < 1e-12);
    }

    #[test]
    fn analytic_fixed_points_are_stationary(lambda in 0.0f64..5.0) {
        for p in fixed_points(lambda).points {
            let s = p.direction;
            let b = Vec3f64::new(1.0, 0.0, lambda * s.z);
            prop_assert!(b.cross(&s).norm() < 1e-12);
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fringe_stays_a_probability(
        r in 0.0f64..1.0, theta in 0.0f64..PI, phi in -PI..PI, alpha in -10.0f64..10.0, seed in any::<u64>(),
    ) {
        let m = Vec3f64::from_polar(theta, phi) * r;
        let p = fringe_probability(&m, alpha);
        prop_assert!((0.0..=1.0).contains(&p));
        let f = simulate_fringe(&m, &[alpha, alpha + 1.0], Some(50), seed).unwrap();
        prop_assert!(f.p_up.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn wrap_phase_lands_in_principal_range(x in -1e3f64..1e3) {
        let w = wrap_phase(x);
        prop_assert!(w > -PI && w <= PI);
        let k = (x - w) / (2.0 * PI);
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn fringe_fit_is_exact_on_clean_data(c in 0.05f64..1.0, phi in -3.1f64..3.1) {
        let a: Vec<f64> = (0..16).map(|k| 2.0 * PI * k as f64 / 16.0).collect();
        let p: Vec<f64> = a.iter().map(|x| 0.5 * (1.0 + c * (x - phi).cos())).collect();
        let fit = fit_fringe(&a, &p, None).unwrap();
        prop_assert!((fit.value("contrast").unwrap() - c).abs() < 1e-10);
        prop_assert!(wrap_phase(fit.value("phase").unwrap() - phi).abs() < 1e-10);
    }

    #[test]
    fn bifurcation_crossings_stay_on_grid(
        peak in 0.0f64..0.05, width in 10.0f64..100.0, h in 0.01f64..0.3, contrast in 0.1f64..1.0,
    ) {
        let x: Vec<f64> = (0..41).map(|k| -80.0 + 4.0 * k as f64).collect();
        let chi: Vec<f64> = x.iter().map(|v| peak * (-v * v / (width * width)).exp()).collect();
        let c = vec![contrast; x.len()];
        let scan = bifurcation_scan(&x, &chi, &c, 10.0, h, ThresholdMode::Effective).unwrap();
        for p in &scan.critical_positions {
            prop_assert!(*p >= -80.0 && *p <= 80.0);
        }
        for (l, ch) in scan.lambda.iter().zip(&chi) {
            prop_assert!((l - contrast * ch * 10.0 / h).abs() < 1e-9 * (1.0 + l.abs()));
        }
        prop_assert_eq!(scan.critical_positions.len() % 2, 0);
    }
}
