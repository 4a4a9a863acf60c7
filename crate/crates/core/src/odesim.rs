//! Brute-force reference integration in de-rotated variables.
//!
//! The exact equations İ = −ε ∂H₁/∂φ, φ̇ = ω(τ) + ε ∂H₁/∂I are integrated
//! in fast time t (τ = εt) using the de-rotated angle
//!
//! ```text
//! χ = φ − Φ(τ)/ε,      Φ(τ) = ∫_{τ₋}^{τ} ω dτ₁,
//! ```
//!
//! so the state (I, χ) evolves by İ = −ε ∂H₁/∂φ(I, χ + Φ/ε, τ) and
//! χ̇ = ε ∂H₁/∂I(I, χ + Φ/ε, τ): both right-hand sides are O(ε) and the
//! fast rotation appears only inside trigonometric arguments. Classic RK4
//! with a fixed step does the rest; sampling times are hit exactly by
//! splitting the final step before each one, never by interpolation.
//!
//! When the frequency profile lacks a closed-form antiderivative, Φ rides
//! along as an extra state component (Φ̇ = εω); reported angles always come
//! from [`phase_accumulator`] so simulator and predictor share one Φ
//! convention.

use crate::error::{Error, Result};
use crate::model::HarmonicModel;
use crate::quad;

/// Quadrature tolerance for Φ when no closed form exists.
const PHASE_QUAD_TOL: f64 = 1e-13;

/// Default resolution: steps per 2π of the fastest rotation present.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 400.0;

/// Hard ceiling on steps for one integration.
pub const MAX_TOTAL_STEPS: f64 = 2e8;

/// Fast-time step selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// h = 2π / (steps_per_period · (1 + max|ω|)), derated to respect
    /// [`MAX_TOTAL_STEPS`].
    Auto { steps_per_period: f64 },
    /// Fixed fast-time step.
    Fixed(f64),
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Auto {
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
        }
    }
}

/// One reference integration: initial data, window, step policy, sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub eps: f64,
    pub i_minus: f64,
    pub phi_minus: f64,
    /// (start, end) in slow time; end < start integrates backwards.
    pub window: (f64, f64),
    pub step: StepPolicy,
    /// Slow times to report, strictly ordered in the direction of travel.
    /// The standard crossing run samples τ* and τ₊.
    pub sampling: Vec<f64>,
}

impl SimConfig {
    pub fn new(eps: f64, i_minus: f64, phi_minus: f64, window: (f64, f64)) -> Self {
        Self {
            eps,
            i_minus,
            phi_minus,
            window,
            step: StepPolicy::default(),
            sampling: vec![window.1],
        }
    }

    pub fn with_sampling(mut self, sampling: Vec<f64>) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_step(mut self, step: StepPolicy) -> Self {
        self.step = step;
        self
    }

    pub fn validate(&self, model: &HarmonicModel) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 0.1) {
            return Err(Error::Domain {
                name: "eps",
                value: self.eps,
                lo: 0.0,
                hi: 0.1,
            });
        }
        let (a, b) = self.window;
        if a == b || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "integration window [{a}, {b}] is empty or nonfinite"
            )));
        }
        model.check_domain(self.i_minus, a)?;
        model.check_domain(self.i_minus, b)?;
        match self.step {
            StepPolicy::Auto { steps_per_period } if steps_per_period >= 1.0 => {}
            StepPolicy::Fixed(h) if h > 0.0 => {}
            _ => {
                return Err(Error::InvalidArgument(
                    "step policy requires steps_per_period >= 1 or a positive fixed step".into(),
                ))
            }
        }
        if self.sampling.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one sampling time is required".into(),
            ));
        }
        let dir = (b - a).signum();
        let (lo, hi) = (a.min(b), a.max(b));
        let mut prev = a;
        for (n, &s) in self.sampling.iter().enumerate() {
            if !(lo <= s && s <= hi) {
                return Err(Error::Domain {
                    name: "sampling time",
                    value: s,
                    lo,
                    hi,
                });
            }
            if n > 0 && (s - prev) * dir <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "sampling times must be strictly ordered along the window; {s} follows {prev}"
                )));
            }
            prev = s;
        }
        Ok(())
    }

    /// Resolved fast-time step magnitude for this run.
    pub fn resolved_step(&self, model: &HarmonicModel) -> f64 {
        let h = match self.step {
            StepPolicy::Fixed(h) => h,
            StepPolicy::Auto { steps_per_period } => {
                let (a, b) = self.window;
                let mut max_omega: f64 = 0.0;
                for j in 0..=512 {
                    let tau = a + (b - a) * j as f64 / 512.0;
                    max_omega = max_omega.max(model.frequency().omega(tau).abs());
                }
                2.0 * std::f64::consts::PI / (steps_per_period * (1.0 + max_omega))
            }
        };
        let span = (self.window.1 - self.window.0).abs() / self.eps;
        h.max(span / MAX_TOTAL_STEPS)
    }
}

/// State reported at one sampling time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub tau: f64,
    pub i: f64,
    pub chi: f64,
    /// Unwrapped angle χ + Φ(τ)/ε.
    pub phi: f64,
}

/// Φ(τ) = ∫_{τ₋}^{τ} ω dτ₁, closed form when the profile supplies an
/// antiderivative, adaptive quadrature otherwise.
pub fn phase_accumulator(model: &HarmonicModel, tau_minus: f64, tau: f64) -> Result<f64> {
    let freq = model.frequency();
    if let (Some(fa), Some(fb)) = (
        freq.omega_antiderivative(tau_minus),
        freq.omega_antiderivative(tau),
    ) {
        return Ok(fb - fa);
    }
    let f = |t: f64| freq.omega(t);
    if tau >= tau_minus {
        quad::adaptive(&f, tau_minus, tau, PHASE_QUAD_TOL)
    } else {
        Ok(-quad::adaptive(&f, tau, tau_minus, PHASE_QUAD_TOL)?)
    }
}

struct Rhs<'a> {
    model: &'a HarmonicModel,
    eps: f64,
    tau_minus: f64,
    /// Φ(τ₋ at window start) offset for the augmented component; unused when
    /// the profile has a closed-form antiderivative.
    closed_phase: bool,
}

impl Rhs<'_> {
    /// d(I, χ, Φ)/dt at fast time t. `phase` is the augmented Φ component,
    /// ignored when a closed form is available.
    fn eval(&self, t: f64, y: [f64; 3]) -> Result<[f64; 3]> {
        let tau = self.eps * t;
        let phase = if self.closed_phase {
            phase_accumulator(self.model, self.tau_minus, tau)?
        } else {
            y[2]
        };
        let phi = y[1] + phase / self.eps;
        let (dphi, di) = self.model.h1_flow(y[0], phi, tau)?;
        Ok([
            -self.eps * dphi,
            self.eps * di,
            self.eps * self.model.frequency().omega(tau),
        ])
    }
}

fn rk4_step(rhs: &Rhs, t: f64, y: [f64; 3], h: f64) -> Result<[f64; 3]> {
    let k1 = rhs.eval(t, y)?;
    let k2 = rhs.eval(t + 0.5 * h, add_scaled(y, k1, 0.5 * h))?;
    let k3 = rhs.eval(t + 0.5 * h, add_scaled(y, k2, 0.5 * h))?;
    let k4 = rhs.eval(t + h, add_scaled(y, k3, h))?;
    let mut out = y;
    for c in 0..3 {
        out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    Ok(out)
}

fn add_scaled(y: [f64; 3], k: [f64; 3], s: f64) -> [f64; 3] {
    [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]]
}

/// Integrates `cfg` and returns one [`TrajectorySample`] per sampling time.
pub fn integrate(model: &HarmonicModel, cfg: &SimConfig) -> Result<Vec<TrajectorySample>> {
    cfg.validate(model)?;
    let eps = cfg.eps;
    let (tau_a, tau_b) = cfg.window;
    let dir = (tau_b - tau_a).signum();
    let h_mag = cfg.resolved_step(model);
    let rhs = Rhs {
        model,
        eps,
        tau_minus: tau_a,
        closed_phase: model.frequency().omega_antiderivative(tau_a).is_some(),
    };

    let mut samples = Vec::with_capacity(cfg.sampling.len());
    let mut y = [cfg.i_minus, cfg.phi_minus, 0.0];
    let mut tau_from = tau_a;

    for &tau_to in &cfg.sampling {
        if tau_to != tau_from {
            let (t_a, t_b) = (tau_from / eps, tau_to / eps);
            let h = dir * h_mag;
            let n_full = ((t_b - t_a) / h).floor() as u64;
            let mut t = t_a;
            for step in 1..=n_full {
                y = rk4_step(&rhs, t, y, h).map_err(|e| locate(e, eps * t, &y))?;
                // Anchored, not accumulated: no drift over long runs.
                t = t_a + step as f64 * h;
                if !(y[0].is_finite() && y[1].is_finite()) {
                    return Err(Error::NumericalBlowup { tau: eps * t });
                }
            }
            let h_last = t_b - t;
            if h_last.abs() > 1e-12 * h_mag {
                y = rk4_step(&rhs, t, y, h_last).map_err(|e| locate(e, eps * t, &y))?;
            }
            if !(y[0].is_finite() && y[1].is_finite()) {
                return Err(Error::NumericalBlowup { tau: tau_to });
            }
        }
        tau_from = tau_to;
        let phase = phase_accumulator(model, tau_a, tau_to)?;
        samples.push(TrajectorySample {
            tau: tau_to,
            i: y[0],
            chi: y[1],
            phi: y[1] + phase / eps,
        });
    }
    Ok(samples)
}

/// Domain exits during a step surface as a trajectory error carrying the
/// last valid state.
fn locate(e: Error, tau: f64, y: &[f64; 3]) -> Error {
    match e {
        Error::Domain { .. } => Error::TrajectoryExit {
            tau,
            i: y[0],
            chi: y[1],
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        benchmark_model, poly_coefficient, zero_perturbation, CoefficientFn, Domain,
        FrequencyProfile, HarmonicCoefficient, HarmonicModel, TauProfile,
    };

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        let err = (got - want).abs() / want.abs().max(1.0);
        assert!(
            err <= tol,
            "{what}: got {got:.17e}, want {want:.17e}, rel err {err:.3e} > {tol:.1e}"
        );
    }

    fn crossing_config(eps: f64, phi_minus: f64) -> SimConfig {
        SimConfig::new(eps, 1.0, phi_minus, (0.0, 2.0)).with_sampling(vec![1.0, 2.0])
    }

    #[test]
    fn zero_perturbation_is_exact() {
        let m = zero_perturbation();
        let cfg = crossing_config(0.01, 0.4);
        let samples = integrate(&m, &cfg).unwrap();
        assert_eq!(samples.len(), 2);
        for s in &samples {
            assert_eq!(s.i, 1.0);
            assert_eq!(s.chi, 0.4);
        }
        // Φ(2) = e − e⁻¹ − 2.
        let phi_expected = 0.4 + 0.350_402_387_287_602_64 / 0.01;
        assert_close(samples[1].phi, phi_expected, 1e-12, "pure rotation angle");
    }

    #[test]
    fn phase_accumulator_closed_form_and_quadrature() {
        let m = benchmark_model();
        assert_eq!(phase_accumulator(&m, 0.0, 0.0).unwrap(), 0.0);
        assert_close(
            phase_accumulator(&m, 0.0, 2.0).unwrap(),
            0.350_402_387_287_602_64,
            1e-13,
            "Phi(2) = e - 1/e - 2",
        );
        assert_close(
            phase_accumulator(&m, 0.0, 1.0).unwrap(),
            -(-1.0_f64).exp(),
            1e-13,
            "Phi(1) = -1/e",
        );

        // Same profile with the antiderivative withheld: quadrature path.
        let quad_only = HarmonicModel::new(
            FrequencyProfile::new(|tau| (tau - 1.0).exp() - 1.0, |tau| (tau - 1.0).exp()),
            CoefficientFn::zero(),
            Vec::new(),
            Domain::new(0.0, 4.0, -0.5, 2.5).unwrap(),
        )
        .unwrap();
        for tau in [0.3, 1.0, 2.0] {
            assert_close(
                phase_accumulator(&quad_only, 0.0, tau).unwrap(),
                phase_accumulator(&m, 0.0, tau).unwrap(),
                1e-13,
                "quadrature vs closed form",
            );
        }
        assert_close(
            phase_accumulator(&quad_only, 2.0, 0.0).unwrap(),
            -phase_accumulator(&quad_only, 0.0, 2.0).unwrap(),
            1e-13,
            "reversed quadrature sign",
        );
    }

    #[test]
    fn sampling_times_are_hit_exactly() {
        let m = benchmark_model();
        let samples = integrate(&m, &crossing_config(0.02, 0.0)).unwrap();
        assert_eq!(samples[0].tau, 1.0);
        assert_eq!(samples[1].tau, 2.0);
    }

    #[test]
    fn step_halving_settles_the_action() {
        let m = benchmark_model();
        let cfg = crossing_config(0.01, 0.0);
        let h = cfg.resolved_step(&m);
        let coarse = integrate(&m, &cfg).unwrap()[1].i;
        let fine = integrate(
            &m,
            &crossing_config(0.01, 0.0).with_step(StepPolicy::Fixed(0.5 * h)),
        )
        .unwrap()[1]
            .i;
        assert!(
            (coarse - fine).abs() <= 1e-10,
            "default-step action moved by {:.3e} under halving",
            (coarse - fine).abs()
        );
    }

    #[test]
    fn self_convergence_is_fourth_order() {
        let m = benchmark_model();
        let base = 16.0 * crossing_config(0.01, 1.0).resolved_step(&m);
        let run = |h: f64| {
            integrate(
                &m,
                &crossing_config(0.01, 1.0).with_step(StepPolicy::Fixed(h)),
            )
            .unwrap()[1]
                .i
        };
        let reference = run(base / 8.0);
        let e1 = (run(base) - reference).abs();
        let e2 = (run(base / 2.0) - reference).abs();
        let ratio = e1 / e2;
        assert!(
            (12.8..=19.2).contains(&ratio),
            "h^4 ratio expected near 16, got {ratio:.2} (e1 {e1:.3e}, e2 {e2:.3e})"
        );
    }

    #[test]
    fn round_trip_returns_to_start() {
        let m = benchmark_model();
        let eps = 0.01;
        let fwd = integrate(&m, &crossing_config(eps, 0.7)).unwrap();
        let end = fwd[1];
        let back_cfg = SimConfig::new(eps, end.i, end.phi, (2.0, 0.0)).with_sampling(vec![0.0]);
        let back = integrate(&m, &back_cfg).unwrap()[0];
        assert!(
            (back.i - 1.0).abs() <= 1e-8,
            "action after round trip: {}",
            back.i
        );
        assert!(
            (back.phi - 0.7).abs() <= 1e-8,
            "angle after round trip: {}",
            back.phi
        );
    }

    #[test]
    fn action_stays_adiabatic_away_from_resonance() {
        let m = benchmark_model();
        let bound = |eps: f64| {
            let sampling: Vec<f64> = (1..=32).map(|j| 0.5 * j as f64 / 32.0).collect();
            let cfg = SimConfig::new(eps, 1.0, 0.3, (0.0, 0.5)).with_sampling(sampling);
            integrate(&m, &cfg)
                .unwrap()
                .iter()
                .map(|s| (s.i - 1.0).abs())
                .fold(0.0_f64, f64::max)
        };
        let b1 = bound(0.02);
        let b2 = bound(0.01);
        let ratio = b1 / b2;
        assert!(
            (1.5..=2.5).contains(&ratio),
            "O(eps) drift expected, ratio {ratio:.2} (bounds {b1:.3e}, {b2:.3e})"
        );
    }

    #[test]
    fn domain_exit_reports_last_state() {
        let narrow = HarmonicModel::new(
            FrequencyProfile::linear(1.0),
            CoefficientFn::zero(),
            vec![HarmonicCoefficient::new(
                1,
                CoefficientFn::zero(),
                poly_coefficient(&[1.0], TauProfile::Constant),
            )],
            Domain::new(0.999, 1.001, 0.0, 2.0).unwrap(),
        )
        .unwrap();
        let cfg = SimConfig::new(0.02, 1.0, 0.0, (0.5, 1.5)).with_sampling(vec![1.5]);
        match integrate(&narrow, &cfg) {
            Err(Error::TrajectoryExit { tau, i, .. }) => {
                assert!((0.5..=1.5).contains(&tau));
                assert!(i.is_finite());
            }
            Err(other) => panic!("expected trajectory exit, got {other:?}"),
            Ok(_) => panic!("trajectory should have left the domain"),
        }
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let m = benchmark_model();
        let ok = crossing_config(0.01, 0.0);
        assert!(ok.validate(&m).is_ok());

        let mut bad = ok.clone();
        bad.eps = 0.2;
        assert!(matches!(bad.validate(&m), Err(Error::Domain { name: "eps", .. })));

        let mut bad = ok.clone();
        bad.sampling = vec![];
        assert!(bad.validate(&m).is_err());

        let mut bad = ok.clone();
        bad.sampling = vec![2.0, 1.0];
        assert!(bad.validate(&m).is_err());

        let mut bad = ok.clone();
        bad.sampling = vec![3.0];
        assert!(bad.validate(&m).is_err());

        let mut bad = ok;
        bad.step = StepPolicy::Fixed(-1.0);
        assert!(bad.validate(&m).is_err());
    }
}
