//! Oscillatory θ-integrals over the fast resonance crossing, and the
//! principal-value integral across it.
//!
//! Near the crossing the angle behaves as φ* + (ω'*/2)θ², so the jump
//! integrals are Fresnel integrals with a per-harmonic quadratic phase.
//! From ∫cos(cθ²)dθ = ∫sin(cθ²)dθ = √(π/(2c)) over the full line,
//!
//! ```text
//! ∫ cos(kφ* + (kω'*/2)θ²) dθ = √(π/(kω'*)) (cos kφ* − sin kφ*),
//! ∫ sin(kφ* + (kω'*/2)θ²) dθ = √(π/(kω'*)) (cos kφ* + sin kφ*),
//! ```
//!
//! which makes every θ-integral here exact per harmonic. Truncated numeric
//! counterparts (`*_quadrature`) exist purely to check the closed forms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    FrequencyProfile, HarmonicModel, ResonanceGeometry, OMEGA_PRIME_FLOOR,
};
use crate::quad;

/// Tolerance of the adaptive quadrature behind the p.v. integral.
const PV_QUAD_TOL: f64 = 1e-12;

fn require_positive_slope(omega_prime_star: f64) -> Result<f64> {
    if omega_prime_star <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "frequency slope at the crossing must be positive (got {omega_prime_star}); \
             flip the time direction for the descending case"
        )));
    }
    Ok(omega_prime_star)
}

/// Full-line Fresnel pair (∫cos(cθ²)dθ, ∫sin(cθ²)dθ), both √(π/(2c)).
pub fn fresnel_pair(c: f64) -> Result<(f64, f64)> {
    if c <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Fresnel curvature must be positive (got {c})"
        )));
    }
    let v = (std::f64::consts::PI / (2.0 * c)).sqrt();
    Ok((v, v))
}

/// ∫_{−∞}^{+∞} ∂H₁(I, φ* + (ω'*/2)θ², τ*)/∂φ dθ, summed in closed form:
/// harmonic k contributes
/// k √(π/(kω'*)) [−a_k (sin kφ* + cos kφ*) + b_k (cos kφ* − sin kφ*)]
/// with coefficients evaluated at (I, τ*).
pub fn theta_integral_dphi(
    model: &HarmonicModel,
    i: f64,
    phi_star: f64,
    geom: &ResonanceGeometry,
) -> Result<f64> {
    let wp = require_positive_slope(geom.omega_prime_star)?;
    model.check_domain(i, geom.tau_star)?;
    let mut sum = 0.0;
    for h in model.harmonics() {
        let k = h.index as f64;
        let (s, c) = (k * phi_star).sin_cos();
        let a = h.a.value(i, geom.tau_star);
        let b = h.b.value(i, geom.tau_star);
        sum += k * (std::f64::consts::PI / (k * wp)).sqrt() * (-a * (s + c) + b * (c - s));
    }
    Ok(sum)
}

/// ∫_{−∞}^{+∞} ∂H̃₁(I, φ* + (ω'*/2)θ², τ*)/∂I dθ; harmonic k contributes
/// √(π/(kω'*)) [a_k' (cos kφ* − sin kφ*) + b_k' (cos kφ* + sin kφ*)].
/// The mean drops out with H̃₁.
pub fn theta_integral_di(
    model: &HarmonicModel,
    i: f64,
    phi_star: f64,
    geom: &ResonanceGeometry,
) -> Result<f64> {
    let wp = require_positive_slope(geom.omega_prime_star)?;
    model.check_domain(i, geom.tau_star)?;
    let mut sum = 0.0;
    for h in model.harmonics() {
        let k = h.index as f64;
        let (s, c) = (k * phi_star).sin_cos();
        let a1 = h.a.d1(i, geom.tau_star);
        let b1 = h.b.d1(i, geom.tau_star);
        sum += (std::f64::consts::PI / (k * wp)).sqrt() * (a1 * (c - s) + b1 * (c + s));
    }
    Ok(sum)
}

/// Integrand g(τ)/ω(τ) with a simple pole where ω crosses zero.
#[derive(Clone)]
pub struct PvIntegrand {
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    frequency: FrequencyProfile,
    pole: f64,
    residue_slope: f64,
}

impl PvIntegrand {
    /// `residue_slope` is ω'(pole); the subtraction below linearizes ω there.
    pub fn new(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        frequency: FrequencyProfile,
        pole: f64,
        residue_slope: f64,
    ) -> Result<Self> {
        if residue_slope.abs() < OMEGA_PRIME_FLOOR {
            return Err(Error::DegenerateResonance {
                omega_prime: residue_slope,
            });
        }
        Ok(Self {
            g: Arc::new(g),
            frequency,
            pole,
            residue_slope,
        })
    }
}

/// Cauchy principal value ∫_{τ₋}^{τ₊} g(τ)/ω(τ) dτ by singularity
/// subtraction: the integrand minus g(τ*)/(ω'*(τ−τ*)) is continuous at the
/// pole and handled by ordinary adaptive quadrature (split at the pole so no
/// node lands on it); the subtracted pole integrates in closed form to
/// g(τ*)/ω'* · ln((τ₊−τ*)/(τ*−τ₋)), which vanishes for a symmetric window.
pub fn pv_integral(f: &PvIntegrand, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo < f.pole && f.pole < hi) {
        return Err(Error::InvalidArgument(format!(
            "pole {} not interior to window [{lo}, {hi}]",
            f.pole
        )));
    }
    let g_star = (f.g)(f.pole);
    let slope = f.residue_slope;
    let pole = f.pole;
    let regular = |tau: f64| -> f64 {
        if tau == pole {
            // Quadrature nodes are interior to their panels, so this arm is
            // unreachable in practice; average the two-sided limit anyway.
            let d = 1e-7 * (1.0 + pole.abs());
            let at = |t: f64| (f.g)(t) / f.frequency.omega(t) - g_star / (slope * (t - pole));
            return 0.5 * (at(pole - d) + at(pole + d));
        }
        (f.g)(tau) / f.frequency.omega(tau) - g_star / (slope * (tau - pole))
    };
    let left = quad::adaptive(&regular, lo, f.pole, PV_QUAD_TOL)?;
    let right = quad::adaptive(&regular, f.pole, hi, PV_QUAD_TOL)?;
    let log_term = g_star / slope * ((hi - f.pole) / (f.pole - lo)).ln();
    Ok(left + right + log_term)
}

// ---------------------------------------------------------------------------
// Truncated-quadrature oracles.
//
// Integrate 2∫₀^Θ in per-period panels (panel ends where the fastest
// harmonic's phase has advanced by 2π, i.e. θ_m = √(2πm / (k_max ω'*/2))),
// one fixed 15-point rule per panel, then add the two-term asymptotic tail
//
//   ∫_Θ^∞ cos(α+βθ²)dθ ≈ −sin(α+βΘ²)/(2βΘ) + cos(α+βΘ²)/(4β²Θ³),
//   ∫_Θ^∞ sin(α+βθ²)dθ ≈  cos(α+βΘ²)/(2βΘ) + sin(α+βΘ²)/(4β²Θ³),
//
// per harmonic. The neglected term is O(Θ⁻⁵), far below the 10⁻⁵ band these
// oracles certify.

fn tail_cos(alpha: f64, beta: f64, theta_max: f64) -> f64 {
    let phase = alpha + beta * theta_max * theta_max;
    -phase.sin() / (2.0 * beta * theta_max)
        + phase.cos() / (4.0 * beta * beta * theta_max.powi(3))
}

fn tail_sin(alpha: f64, beta: f64, theta_max: f64) -> f64 {
    let phase = alpha + beta * theta_max * theta_max;
    phase.cos() / (2.0 * beta * theta_max)
        + phase.sin() / (4.0 * beta * beta * theta_max.powi(3))
}

fn panel_integral(f: &dyn Fn(f64) -> f64, base_curvature: f64, theta_max: f64) -> f64 {
    let mut total = 0.0;
    let mut prev = 0.0;
    let mut m = 1u64;
    loop {
        let next = (2.0 * std::f64::consts::PI * m as f64 / base_curvature).sqrt();
        if next >= theta_max {
            break;
        }
        total += quad::kronrod15(f, prev, next).0;
        prev = next;
        m += 1;
    }
    total + quad::kronrod15(f, prev, theta_max).0
}

/// Numeric counterpart of [`fresnel_pair`], truncated at `theta_max`.
pub fn fresnel_pair_quadrature(c: f64, theta_max: f64) -> Result<(f64, f64)> {
    if c <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Fresnel curvature must be positive (got {c})"
        )));
    }
    let cos_part = panel_integral(&|th: f64| (c * th * th).cos(), c, theta_max)
        + tail_cos(0.0, c, theta_max);
    let sin_part = panel_integral(&|th: f64| (c * th * th).sin(), c, theta_max)
        + tail_sin(0.0, c, theta_max);
    Ok((2.0 * cos_part, 2.0 * sin_part))
}

fn max_harmonic(model: &HarmonicModel) -> f64 {
    model
        .harmonics()
        .iter()
        .map(|h| h.index)
        .max()
        .unwrap_or(1) as f64
}

/// Numeric counterpart of [`theta_integral_dphi`], truncated at `theta_max`.
pub fn theta_integral_dphi_quadrature(
    model: &HarmonicModel,
    i: f64,
    phi_star: f64,
    geom: &ResonanceGeometry,
    theta_max: f64,
) -> Result<f64> {
    let wp = require_positive_slope(geom.omega_prime_star)?;
    model.check_domain(i, geom.tau_star)?;
    let tau_star = geom.tau_star;
    let c0 = 0.5 * wp;
    let f = |th: f64| {
        model
            .h1_dphi(i, phi_star + c0 * th * th, tau_star)
            .expect("domain already checked")
    };
    let mut total = panel_integral(&f, max_harmonic(model) * c0, theta_max);
    for h in model.harmonics() {
        let k = h.index as f64;
        let a = h.a.value(i, tau_star);
        let b = h.b.value(i, tau_star);
        total += k * b * tail_cos(k * phi_star, k * c0, theta_max);
        total -= k * a * tail_sin(k * phi_star, k * c0, theta_max);
    }
    Ok(2.0 * total)
}

/// Numeric counterpart of [`theta_integral_di`], truncated at `theta_max`.
pub fn theta_integral_di_quadrature(
    model: &HarmonicModel,
    i: f64,
    phi_star: f64,
    geom: &ResonanceGeometry,
    theta_max: f64,
) -> Result<f64> {
    let wp = require_positive_slope(geom.omega_prime_star)?;
    model.check_domain(i, geom.tau_star)?;
    let tau_star = geom.tau_star;
    let c0 = 0.5 * wp;
    let f = |th: f64| {
        let phi = phi_star + c0 * th * th;
        let mut sum = 0.0;
        for h in model.harmonics() {
            let k = h.index as f64;
            sum += h.a.d1(i, tau_star) * (k * phi).cos() + h.b.d1(i, tau_star) * (k * phi).sin();
        }
        sum
    };
    let mut total = panel_integral(&f, max_harmonic(model) * c0, theta_max);
    for h in model.harmonics() {
        let k = h.index as f64;
        total += h.a.d1(i, tau_star) * tail_cos(k * phi_star, k * c0, theta_max);
        total += h.b.d1(i, tau_star) * tail_sin(k * phi_star, k * c0, theta_max);
    }
    Ok(2.0 * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        find_resonance, benchmark_model, poly_coefficient, zero_perturbation, CoefficientFn, Domain,
        HarmonicCoefficient, HarmonicModel, TauProfile,
    };
    use std::f64::consts::PI;

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        let err = (got - want).abs() / want.abs().max(1.0);
        assert!(
            err <= tol,
            "{what}: got {got:.17e}, want {want:.17e}, rel err {err:.3e} > {tol:.1e}"
        );
    }

    fn benchmark_geometry() -> ResonanceGeometry {
        find_resonance(&benchmark_model(), (0.5, 1.5)).unwrap()
    }

    #[test]
    fn fresnel_values_and_scaling() {
        let (c, s) = fresnel_pair(0.5).unwrap();
        assert_close(c, PI.sqrt(), 1e-14, "cos part at c = 1/2");
        assert_close(s, PI.sqrt(), 1e-14, "sin part at c = 1/2");
        let (c4, _) = fresnel_pair(2.0).unwrap();
        assert_close(c4, 0.5 * c, 1e-14, "quadrupled curvature halves the value");
        assert!(fresnel_pair(0.0).is_err());
        assert!(fresnel_pair(-1.0).is_err());
    }

    #[test]
    fn fresnel_matches_truncated_quadrature() {
        for c in [0.3, 0.5, 2.0] {
            let (cc, sc) = fresnel_pair(c).unwrap();
            let (cq, sq) = fresnel_pair_quadrature(c, 80.0).unwrap();
            assert_close(cq, cc, 1e-6, "cos part vs oracle");
            assert_close(sq, sc, 1e-6, "sin part vs oracle");
        }
    }

    // Frozen closed-form values at (I=1, φ*=0.3, τ*=1, ω'*=1), confirmed in
    // extended precision against truncated quadrature with Θ = 200.
    #[test]
    fn benchmark_theta_integrals() {
        let m = benchmark_model();
        let g = benchmark_geometry();
        assert_close(
            theta_integral_dphi(&m, 1.0, 0.3, &g).unwrap(),
            1.432_331_669_307_346_5,
            1e-10,
            "dphi integral = sqrt(3pi/2)(cos 0.3 - sin 0.3)",
        );
        assert_close(
            theta_integral_di(&m, 1.0, 0.3, &g).unwrap(),
            2.262_803_685_860_108_0,
            1e-10,
            "dI integral = sqrt(pi) 5/(2 sqrt 6) (cos 0.3 + sin 0.3)",
        );
    }

    #[test]
    fn benchmark_theta_integrals_match_quadrature_oracle() {
        let m = benchmark_model();
        let g = benchmark_geometry();
        let closed = theta_integral_dphi(&m, 1.0, 0.3, &g).unwrap();
        let numeric = theta_integral_dphi_quadrature(&m, 1.0, 0.3, &g, 200.0).unwrap();
        assert_close(numeric, closed, 1e-5, "dphi closed vs quadrature");
        let closed = theta_integral_di(&m, 1.0, 0.3, &g).unwrap();
        let numeric = theta_integral_di_quadrature(&m, 1.0, 0.3, &g, 200.3).unwrap();
        assert_close(numeric, closed, 1e-5, "dI closed vs quadrature");
    }

    #[test]
    fn two_harmonic_model_matches_quadrature_oracle() {
        let model = HarmonicModel::new(
            crate::model::FrequencyProfile::linear(1.0),
            CoefficientFn::zero(),
            vec![
                HarmonicCoefficient::new(
                    1,
                    poly_coefficient(&[0.4, -0.2], TauProfile::Constant),
                    poly_coefficient(&[1.0, 0.5, -0.1], TauProfile::InvSqrtExp),
                ),
                HarmonicCoefficient::new(
                    3,
                    poly_coefficient(&[-0.3, 0.0, 0.2], TauProfile::InvSqrtExp),
                    poly_coefficient(&[0.7, 0.1], TauProfile::Constant),
                ),
            ],
            Domain::new(0.1, 3.0, 0.0, 2.0).unwrap(),
        )
        .unwrap();
        let geom = find_resonance(&model, (0.5, 1.5)).unwrap();
        for phi in [0.0, 0.9, -2.4] {
            let closed = theta_integral_dphi(&model, 1.2, phi, &geom).unwrap();
            let numeric =
                theta_integral_dphi_quadrature(&model, 1.2, phi, &geom, 120.0).unwrap();
            assert_close(numeric, closed, 1e-5, "two-harmonic dphi");
            let closed = theta_integral_di(&model, 1.2, phi, &geom).unwrap();
            let numeric = theta_integral_di_quadrature(&model, 1.2, phi, &geom, 120.0).unwrap();
            assert_close(numeric, closed, 1e-5, "two-harmonic dI");
        }
    }

    #[test]
    fn zero_perturbation_integrals_vanish() {
        let m = zero_perturbation();
        let g = find_resonance(&m, (0.5, 1.5)).unwrap();
        assert_eq!(theta_integral_dphi(&m, 1.0, 0.7, &g).unwrap(), 0.0);
        assert_eq!(theta_integral_di(&m, 1.0, 0.7, &g).unwrap(), 0.0);
    }

    #[test]
    fn negative_slope_is_rejected() {
        let m = benchmark_model();
        let mut g = benchmark_geometry();
        g.omega_prime_star = -1.0;
        assert!(theta_integral_dphi(&m, 1.0, 0.0, &g).is_err());
        assert!(theta_integral_di(&m, 1.0, 0.0, &g).is_err());
    }

    #[test]
    fn quadrupled_slope_halves_theta_integral() {
        let m = benchmark_model();
        let g1 = benchmark_geometry();
        let mut g4 = g1;
        g4.omega_prime_star = 4.0 * g1.omega_prime_star;
        let v1 = theta_integral_dphi(&m, 1.0, 0.42, &g1).unwrap();
        let v4 = theta_integral_dphi(&m, 1.0, 0.42, &g4).unwrap();
        assert_close(v4, 0.5 * v1, 1e-13, "sqrt(1/omega') scaling");
    }

    // P.v. of the benchmark term: with g(τ) = −(ε/2)·∂²⟨H̃₁²⟩/∂I²(1, τ) the
    // integral over [0, 2] collapses to −(ε/2)·p.v.∫ dτ/(e^{2(τ−1)}−1) = ε/2.
    #[test]
    fn principal_value_benchmark_window() {
        let eps = 0.01;
        let m = benchmark_model();
        let freq = m.frequency().clone();
        let f = PvIntegrand::new(
            move |tau: f64| -0.5 * eps * m.m2_di2(1.0, tau).unwrap(),
            freq,
            1.0,
            1.0,
        )
        .unwrap();
        let v = pv_integral(&f, (0.0, 2.0)).unwrap();
        assert_close(v, 0.5 * eps, 1e-10, "p.v. term equals eps/2");
    }

    #[test]
    fn principal_value_matches_exclusion_oracle() {
        let m = benchmark_model();
        let freq = m.frequency().clone();
        let f = PvIntegrand::new(
            move |tau: f64| -0.5 * m.m2_di2(1.0, tau).unwrap(),
            freq,
            1.0,
            1.0,
        )
        .unwrap();
        let prod = pv_integral(&f, (0.0, 2.0)).unwrap();

        // Symmetric-δ exclusion: I(δ) = p.v. − 2r(τ*)δ + O(δ³), so
        // 2I(δ/2) − I(δ) removes the linear term.
        let m = benchmark_model();
        let raw = move |tau: f64| {
            -0.5 * m.m2_di2(1.0, tau).unwrap() / m.frequency().omega(tau)
        };
        let excluded = |delta: f64| {
            quad::adaptive(&raw, 0.0, 1.0 - delta, 1e-12).unwrap()
                + quad::adaptive(&raw, 1.0 + delta, 2.0, 1e-12).unwrap()
        };
        let coarse = excluded(1e-3);
        let fine = excluded(5e-4);
        let oracle = 2.0 * fine - coarse;
        assert_close(prod, oracle, 1e-8, "subtraction vs exclusion+Richardson");
    }

    #[test]
    fn principal_value_degenerate_cases() {
        let freq = crate::model::FrequencyProfile::linear(1.0);
        let zero = PvIntegrand::new(|_| 0.0, freq.clone(), 1.0, 1.0).unwrap();
        assert_eq!(pv_integral(&zero, (0.0, 2.0)).unwrap(), 0.0);

        // Constant numerator, symmetric window: pure pole, p.v. = 0.
        let unit = PvIntegrand::new(|_| 1.0, freq.clone(), 1.0, 1.0).unwrap();
        let v = pv_integral(&unit, (0.0, 2.0)).unwrap();
        assert!(v.abs() <= 1e-12, "symmetric pole must cancel, got {v}");

        // Asymmetric window picks up exactly the log term.
        let v = pv_integral(&unit, (0.5, 2.0)).unwrap();
        assert_close(v, 2.0_f64.ln(), 1e-12, "p.v. over [0.5, 2] of 1/(tau-1)");

        assert!(pv_integral(&unit, (1.5, 2.0)).is_err());
        assert!(PvIntegrand::new(|_| 1.0, freq, 1.0, 0.0).is_err());
    }
}
