use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qframe::channel::{
    minimal_rotation, stabilizer_update, step_drift, transmit, ChannelState, DriftParams, Regime, RegimeSchedule, StabilizerState,
    DEFAULT_SIGMA_DAY, DEFAULT_SIGMA_NIGHT, DEFAULT_SIGMA_RESIDUAL, REORTHONORMALIZE_AT,
};
use qframe::jones::{Basis, JonesMatrix, JonesVector, Polarization};

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[test]
fn million_drift_steps_stay_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = DriftParams { sigma_day: 0.5, sigma_night: 0.5, ..Default::default() };
    let mut s = ChannelState::ideal();
    for _ in 0..1_000_000 {
        s = step_drift(&s, 0.25, &params, &mut rng);
        assert!(s.u.unitarity_deviation() < 1e-6);
    }
    assert!(s.u.unitarity_deviation() <= REORTHONORMALIZE_AT);
}

/// For rotations by `|N(0, sigma sqrt(dt))|` about isotropic axes the Stokes
/// autocorrelation decays as `exp(-sigma^2 t / 3)`.
#[test]
fn drift_rate_matches_diffusion_law() {
    let params = DriftParams::default();
    let (span, dt, walks) = (600.0, 0.25, 400);
    let mut mean = 0.0;
    for w in 0..walks {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + w);
        let mut s = ChannelState::ideal();
        for _ in 0..(span / dt) as usize {
            s = step_drift(&s, dt, &params, &mut rng);
        }
        mean += dot(s.u.apply(&JonesVector::horizontal()).stokes().as_array(), [1.0, 0.0, 0.0]);
    }
    mean /= walks as f64;
    let expected = (-DEFAULT_SIGMA_DAY.powi(2) * span / 3.0).exp();
    // var of s.s0 is at most 1, so 4 standard errors is 0.2
    assert!((mean - expected).abs() < 0.2, "{mean} vs {expected}");
    assert!(mean < 0.9, "day drift too slow: {mean}");
}

#[test]
fn night_is_quieter_than_day() {
    let p = DriftParams::default();
    assert_eq!(p.sigma_at(0.0), DEFAULT_SIGMA_DAY);
    assert_eq!(p.sigma_at(9.0 * 3600.0), DEFAULT_SIGMA_NIGHT);
    assert!(p.sigma_night < p.sigma_day);
    let sch = RegimeSchedule::default();
    assert_eq!(sch.regime_at(7.9 * 3600.0), Regime::Day);
    assert_eq!(sch.regime_at(8.1 * 3600.0), Regime::Night);
    assert_eq!(sch.regime_at(20.1 * 3600.0), Regime::Day);
}

#[test]
fn residual_misalignment_costs_half_a_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let target = Polarization::H.jones().stokes();
    let mut err = 0.0;
    let n = 20_000;
    for _ in 0..n {
        let ch = JonesMatrix::random_unitary(&mut rng);
        let stab = StabilizerState::new(Basis::Linear, DEFAULT_SIGMA_RESIDUAL);
        let measured = ch.apply(&JonesVector::horizontal()).stokes();
        let next = stabilizer_update(&stab, &measured, &target, &mut rng);
        let out = next.comp.mul(&ch).apply(&JonesVector::horizontal());
        err += 1.0 - out.overlap(&JonesVector::horizontal());
    }
    err /= n as f64;
    let expected = (1.0 - (-DEFAULT_SIGMA_RESIDUAL.powi(2) / 2.0).exp()) / 2.0;
    assert!((err - expected).abs() < 0.1 * expected, "{err} vs {expected}");
    assert!(err > 0.003 && err < 0.007);
}

proptest! {
    #[test]
    fn transmit_keeps_orthogonal_pairs(seed in any::<u64>(), loss in 0.0..30.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = ChannelState::new(JonesMatrix::random_unitary(&mut rng), loss);
        let (h, ph) = transmit(&JonesVector::horizontal(), 1.0, &ch);
        let (v, pv) = transmit(&JonesVector::vertical(), 1.0, &ch);
        prop_assert!(h.inner(&v).norm() < 1e-10);
        prop_assert!((ph - pv).abs() < 1e-15);
        prop_assert!((ph - 10f64.powf(-loss / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn exact_lock_without_residual(seed in any::<u64>(), pol in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Polarization::ALL[pol];
        let ch = JonesMatrix::random_unitary(&mut rng);
        let stab = StabilizerState::new(p.basis(), 0.0);
        let target = p.jones().stokes();
        let next = stabilizer_update(&stab, &ch.apply(&p.jones()).stokes(), &target, &mut rng);
        let out = next.comp.mul(&ch).apply(&p.jones());
        prop_assert!((out.overlap(&p.jones()) - 1.0).abs() < 1e-10);
        // the partner state follows the locked one
        let partner = next.comp.mul(&ch).apply(&p.orthogonal().jones());
        prop_assert!((partner.overlap(&p.orthogonal().jones()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn minimal_rotation_hits_target(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let from = JonesVector::random(&mut rng).stokes();
        let to = JonesVector::random(&mut rng).stokes();
        let r = minimal_rotation(&from, &to);
        prop_assert!(r.unitarity_deviation() < 1e-12);
        let moved = r.apply(&from.to_jones()).stokes();
        prop_assert!(moved.angle_to(&to) < 1e-7);
    }
}
