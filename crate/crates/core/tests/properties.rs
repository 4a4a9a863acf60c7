//! Property tests over randomized models and evaluation points.

use proptest::prelude::*;
use resjump::model::find_resonance;
use resjump::predictor::{predict_crossing, PredictionInputs};
use resjump::{
    benchmark_model, poly_coefficient, CoefficientFn, Domain, FrequencyProfile, HarmonicCoefficient,
    HarmonicModel, TauProfile,
};
use std::f64::consts::{PI, TAU};

fn coeff_strategy() -> impl Strategy<Value = CoefficientFn> {
    (
        prop::collection::vec(-1.0..1.0f64, 1..=3),
        prop_oneof![
            Just(TauProfile::Constant),
            Just(TauProfile::ExpShift),
            Just(TauProfile::InvSqrtExp),
        ],
    )
        .prop_map(|(coeffs, profile)| poly_coefficient(&coeffs, profile))
}

fn model_strategy() -> impl Strategy<Value = HarmonicModel> {
    prop::collection::vec((coeff_strategy(), coeff_strategy()), 1..=3).prop_map(|harmonics| {
        let harmonics = harmonics
            .into_iter()
            .enumerate()
            .map(|(j, (a, b))| HarmonicCoefficient::new(j as u32 + 1, a, b))
            .collect();
        HarmonicModel::new(
            FrequencyProfile::exp_shift(),
            CoefficientFn::zero(),
            harmonics,
            Domain::new(0.0, 4.0, -0.5, 2.5).unwrap(),
        )
        .unwrap()
    })
}

proptest! {
    // The perturbation and everything derived from it is 2π-periodic in φ.
    #[test]
    fn angle_periodicity(
        model in model_strategy(),
        i in 0.3..3.7f64,
        phi in -10.0..10.0f64,
        tau in 0.0..0.8f64,
    ) {
        let shifted = phi + TAU;
        prop_assert!((model.h1(i, shifted, tau).unwrap() - model.h1(i, phi, tau).unwrap()).abs() <= 1e-12);
        prop_assert!((model.h1_dphi(i, shifted, tau).unwrap() - model.h1_dphi(i, phi, tau).unwrap()).abs() <= 1e-12);
        prop_assert!((model.u1(i, shifted, tau).unwrap() - model.u1(i, phi, tau).unwrap()).abs() <= 1e-11);
        prop_assert!((model.v1(i, shifted, tau).unwrap() - model.v1(i, phi, tau).unwrap()).abs() <= 1e-11);
    }

    // H̃₁ has zero angular mean; the trapezoid rule is exact for a
    // trigonometric polynomial once the node count clears every harmonic.
    #[test]
    fn oscillating_part_has_zero_mean(
        model in model_strategy(),
        i in 0.3..3.7f64,
        tau in 0.0..2.0f64,
    ) {
        let n = 64;
        let mean = (0..n)
            .map(|j| model.h1_tilde(i, TAU * j as f64 / n as f64, tau).unwrap())
            .sum::<f64>()
            / n as f64;
        prop_assert!(mean.abs() <= 1e-12, "residual mean {mean:.3e}");
    }

    // ⟨H̃₁²⟩ from coefficients against direct angular quadrature.
    #[test]
    fn mean_square_matches_quadrature(
        model in model_strategy(),
        i in 0.3..3.7f64,
        tau in 0.0..2.0f64,
    ) {
        let n = 128;
        let quad = (0..n)
            .map(|j| model.h1_tilde(i, TAU * j as f64 / n as f64, tau).unwrap().powi(2))
            .sum::<f64>()
            / n as f64;
        let m2 = model.m2(i, tau).unwrap();
        prop_assert!((m2 - quad).abs() <= 1e-10 * m2.abs().max(1.0));
    }

    // u₁ is defined by ω·u₁ = H̃₁ away from the resonance.
    #[test]
    fn u1_times_omega_is_the_oscillating_part(
        model in model_strategy(),
        i in 0.3..3.7f64,
        phi in 0.0..TAU,
        tau in 0.0..0.8f64,
    ) {
        let lhs = model.frequency().omega(tau) * model.u1(i, phi, tau).unwrap();
        let rhs = model.h1_tilde(i, phi, tau).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    // Analytic coefficient derivatives agree with their finite-difference
    // fallbacks wherever both exist.
    #[test]
    fn coefficient_derivatives_are_consistent(
        coeff in coeff_strategy(),
        i in 0.5..1.5f64,
        tau in 0.0..2.0f64,
    ) {
        prop_assert!(coeff.cross_check(i, tau) <= 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // The stored term breakdowns sum to the stored totals.
    #[test]
    fn breakdown_reassembles(
        eps in 0.002..0.05f64,
        phi_minus in 0.0..TAU,
    ) {
        let model = benchmark_model();
        let geom = find_resonance(&model, (0.0, 2.0)).unwrap();
        let inputs = PredictionInputs::new(&model, eps, 1.0, phi_minus, geom).unwrap();
        let r = predict_crossing(&inputs).unwrap();
        prop_assert!((r.action_terms.total() - r.i_plus).abs() <= 1e-14);
        prop_assert!((r.angle_terms.total() - r.phi_plus).abs() <= 1e-14);
    }

    // Entry angles a full turn apart give predictions a full turn apart.
    #[test]
    fn gauge_shift_by_one_turn(
        eps in 0.005..0.02f64,
        phi_minus in 0.0..TAU,
    ) {
        let model = benchmark_model();
        let geom = find_resonance(&model, (0.0, 2.0)).unwrap();
        let base = predict_crossing(
            &PredictionInputs::new(&model, eps, 1.0, phi_minus, geom).unwrap(),
        )
        .unwrap();
        let turned = predict_crossing(
            &PredictionInputs::new(&model, eps, 1.0, phi_minus + 2.0 * PI, geom).unwrap(),
        )
        .unwrap();
        prop_assert!((turned.phi_plus - base.phi_plus - 2.0 * PI).abs() <= 1e-12);
        prop_assert!((turned.phi_star_check - base.phi_star_check - 2.0 * PI).abs() <= 1e-12);
        prop_assert!((turned.i_plus - base.i_plus).abs() <= 1e-12);
        prop_assert!((turned.i_star_check - base.i_star_check).abs() <= 1e-12);
    }
}
