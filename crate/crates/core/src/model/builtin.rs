//! Ready-made models used by the verification suite and the CLI.

use super::{CoefficientFn, Domain, FrequencyProfile, HarmonicCoefficient, HarmonicModel};

/// The single-harmonic benchmark system
///
/// ```text
/// ω(τ)  = e^{τ−1} − 1,
/// H₁    = I √(4 − I) · s(τ) · sin φ,     s(τ) = 1/√(e^{τ−1} + 1),
/// ```
///
/// on D_I = [0, 4], D_τ = [−0.5, 2.5]. The resonance sits at τ* = 1 with
/// ω'(τ*) = 1. The action factor A(I) = I√(4 − I) carries analytic
/// derivatives:
///
/// ```text
/// A'   = (8 − 3I) / (2√(4 − I)),
/// A''  = (3I − 16) / (4 (4 − I)^{3/2}),
/// A''' = 3 (I − 8) / (8 (4 − I)^{5/2}),
/// ```
///
/// each multiplied by s(τ).
pub fn benchmark_model() -> HarmonicModel {
    let s = |tau: f64| 1.0 / ((tau - 1.0).exp() + 1.0).sqrt();
    let b = CoefficientFn::new(move |i: f64, tau: f64| i * (4.0 - i).sqrt() * s(tau))
        .with_d1(move |i, tau| s(tau) * (8.0 - 3.0 * i) / (2.0 * (4.0 - i).sqrt()))
        .with_d2(move |i, tau| s(tau) * (3.0 * i - 16.0) / (4.0 * (4.0 - i).powf(1.5)))
        .with_d3(move |i, tau| s(tau) * 3.0 * (i - 8.0) / (8.0 * (4.0 - i).powf(2.5)));

    HarmonicModel::new(
        FrequencyProfile::exp_shift(),
        CoefficientFn::zero(),
        vec![HarmonicCoefficient::new(1, CoefficientFn::zero(), b)],
        Domain::new(0.0, 4.0, -0.5, 2.5).expect("static domain"),
    )
    .expect("benchmark model is valid by construction")
}

/// Same frequency profile and domain as [`benchmark_model`], H₁ ≡ 0.
/// Exercises the exactness path: the action must be bit-for-bit constant and
/// the angle must reduce to the pure rotation ∫ω dτ / ε.
pub fn zero_perturbation() -> HarmonicModel {
    HarmonicModel::new(
        FrequencyProfile::exp_shift(),
        CoefficientFn::zero(),
        Vec::new(),
        Domain::new(0.0, 4.0, -0.5, 2.5).expect("static domain"),
    )
    .expect("zero model is valid by construction")
}
