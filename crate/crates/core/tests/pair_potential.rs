use std::f64::consts::PI;

use rydberg_ising::pair_potential::{
    dressed_interaction_exact, dressed_interaction_softcore, forster_pair_energy, interaction_range, AngularFactor,
    DressingParams,
};
use rydberg_ising::{mhz_to_angular, DressingParams64};

fn reference() -> DressingParams64 {
    DressingParams::operating_point()
}

/// Fourth-order perturbation theory on the pair Hamiltonian with the doubly
/// excited state removed: E₂ − 2E₁ → −Ω⁴/(8Δ³).
fn plateau(omega: f64, delta: f64) -> f64 {
    -omega.powi(4) / (8.0 * delta.powi(3))
}

#[test]
fn blockade_limit_matches_fourth_order() {
    let p = reference();
    let omega = 0.05 * p.detuning;
    let q = p.with_rabi_frequency(omega).unwrap();
    for r in [1e-3, 1e-2, 0.05] {
        let j = dressed_interaction_exact(r, 0.0, &q).unwrap();
        let rel = (j / plateau(omega, q.detuning) - 1.0).abs();
        assert!(rel < 0.01, "r = {r}: relative error {rel}");
    }
}

#[test]
fn operating_point_plateau_magnitude() {
    let j0 = reference().blockade_plateau();
    let hz = j0.abs() / (2.0 * PI) * 1e6;
    assert!((hz - 176.0).abs() < 1.0, "|J0|/2π = {hz} Hz");
}

#[test]
fn vanishing_pair_shift_gives_zero() {
    let p = reference().with_angular_factor(AngularFactor::custom(|_| 0.0));
    for r in [0.1, 1.0, 10.0] {
        assert_eq!(dressed_interaction_exact(r, 0.3, &p).unwrap(), 0.0);
    }
}

#[test]
fn van_der_waals_asymptote_and_range() {
    // Far-detuned Förster channel so that c/Δ_F ≪ 1 at r_c.
    let delta: f64 = mhz_to_angular(0.5);
    let df: f64 = mhz_to_angular(40000.0);
    let c3: f64 = mhz_to_angular(100.0);
    let p = DressingParams::new(mhz_to_angular(0.05), delta, df, c3).unwrap();
    let c6 = c3 * c3 / df;
    let r = (c3 / (1e-2 * df)).cbrt();
    let v = forster_pair_energy(r, 0.0, &p).unwrap();
    assert!((v / (-c6 / r.powi(6)) - 1.0).abs() < 2e-4);

    let rc = interaction_range(&p, 0.0).unwrap();
    let oracle = (c6 / delta).powf(1.0 / 6.0);
    let c_at = c3 / rc.powi(3);
    assert!(c_at / df < 1e-2);
    assert!((rc / oracle - 1.0).abs() < 1e-4, "{rc} vs {oracle}");

    let p2 = p.with_detuning(2.0 * delta).unwrap();
    let rc2 = interaction_range(&p2, 0.0).unwrap();
    assert!((rc / rc2 / 2f64.powf(1.0 / 6.0) - 1.0).abs() < 1e-4);
}

#[test]
fn default_range_within_five_microns() {
    let rc = interaction_range(&reference(), 0.0).unwrap();
    assert!(rc > 3.0 && rc <= 5.0, "r_c = {rc}");
}

#[test]
fn softcore_at_range_is_one_third() {
    let p = reference();
    let rc = interaction_range(&p, 0.0).unwrap();
    let j = dressed_interaction_softcore(rc, 0.0, &p).unwrap();
    assert!((j / p.blockade_plateau() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn softcore_tracks_exact_within_five_percent() {
    for ratio in [0.02, 0.05, 0.1] {
        let base = reference();
        let p = base.with_rabi_frequency(ratio * base.detuning).unwrap();
        let rc = interaction_range(&p, 0.0).unwrap();
        for i in 0..=200 {
            let r = rc * 0.2 * 25f64.powf(i as f64 / 200.0);
            let e = dressed_interaction_exact(r, 0.0, &p).unwrap();
            let s = dressed_interaction_softcore(r, 0.0, &p).unwrap();
            assert!(((s - e) / e).abs() <= 0.05, "Ω/Δ = {ratio}, r = {r}: {s} vs {e}");
            assert!((s - e).abs() / p.blockade_plateau().abs() <= 0.05);
        }
    }
}

#[test]
fn ferromagnetic_sign_and_monotone_tail() {
    let p = reference();
    let rc = interaction_range(&p, 0.0).unwrap();
    let mut last = f64::INFINITY;
    for i in 0..300 {
        let r = 0.05 + 0.1 * i as f64;
        let j = dressed_interaction_exact(r, 0.0, &p).unwrap();
        assert!(j < 0.0, "J({r}) = {j}");
        if r >= rc {
            assert!(j.abs() <= last * (1.0 + 1e-9));
            last = j.abs();
        }
    }
}

#[test]
fn blockade_limit_is_resolved_in_single_precision() {
    let p = DressingParams::<f32>::operating_point();
    let omega = 0.05 * p.detuning;
    let q = p.with_rabi_frequency(omega).unwrap();
    let j = dressed_interaction_softcore(1e-2_f32, 0.0, &q).unwrap();
    let j0 = -omega.powi(4) / (8.0 * q.detuning.powi(3));
    assert!((j / j0 - 1.0).abs() < 1e-3);
}
