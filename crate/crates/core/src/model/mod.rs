//! Resonant one-frequency system: H(I, φ, τ) = ω(τ)·I + ε·H₁(I, φ, τ).
//!
//! The perturbation is stored as a finite Fourier series in the angle,
//!
//! ```text
//! H₁(I, φ, τ) = a₀(I, τ) + Σ_k [ a_k(I, τ) cos kφ + b_k(I, τ) sin kφ ],
//! ```
//!
//! with per-harmonic coefficient functions of the action and the slow time.
//! Every angle integral used by the predictor then has a closed per-harmonic
//! form, and the φ-average H̄₁ = a₀ and zero-mean part H̃₁ = H₁ − a₀ are exact
//! by construction.
//!
//! Coefficient functions may carry analytic I-derivative suppliers up to
//! order 3; central finite differences fill in for any that are absent.

mod builtin;
mod coefficient;

pub use builtin::{benchmark_model, zero_perturbation};
pub use coefficient::{poly_coefficient, CoefficientFn, TauProfile};

use std::sync::Arc;

use crate::error::{Error, Result};

/// Closure of the slow time only.
pub type TauFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// |ω| below this is treated as "at resonance" by the 1/ω evaluators.
pub const OMEGA_FLOOR: f64 = 1e-12;

/// Non-degeneracy floor for |ω'(τ*)|.
pub const OMEGA_PRIME_FLOOR: f64 = 1e-8;

/// Bisection stops when |ω| or the bracket width drops below this.
pub const ROOT_TOL: f64 = 1e-14;

/// Window symmetry is asserted to this absolute tolerance.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Unperturbed frequency ω(τ) with its slope and optional antiderivative.
#[derive(Clone)]
pub struct FrequencyProfile {
    omega: TauFn,
    omega_prime: TauFn,
    omega_antiderivative: Option<TauFn>,
}

impl FrequencyProfile {
    pub fn new(
        omega: impl Fn(f64) -> f64 + Send + Sync + 'static,
        omega_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            omega: Arc::new(omega),
            omega_prime: Arc::new(omega_prime),
            omega_antiderivative: None,
        }
    }

    /// Attach a closed-form antiderivative ∫ω dτ.
    pub fn with_antiderivative(
        mut self,
        anti: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.omega_antiderivative = Some(Arc::new(anti));
        self
    }

    /// ω(τ) = e^{τ−1} − 1, the profile of the worked example.
    pub fn exp_shift() -> Self {
        Self::new(|tau| (tau - 1.0).exp() - 1.0, |tau| (tau - 1.0).exp())
            .with_antiderivative(|tau| (tau - 1.0).exp() - tau)
    }

    /// ω(τ) = τ − center.
    pub fn linear(center: f64) -> Self {
        Self::new(move |tau| tau - center, |_| 1.0)
            .with_antiderivative(move |tau| 0.5 * tau * tau - center * tau)
    }

    pub fn omega(&self, tau: f64) -> f64 {
        (self.omega)(tau)
    }

    pub fn omega_prime(&self, tau: f64) -> f64 {
        (self.omega_prime)(tau)
    }

    pub fn omega_antiderivative(&self, tau: f64) -> Option<f64> {
        self.omega_antiderivative.as_ref().map(|f| f(tau))
    }
}

impl std::fmt::Debug for FrequencyProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrequencyProfile")
            .field("closed_antiderivative", &self.omega_antiderivative.is_some())
            .finish_non_exhaustive()
    }
}

/// One harmonic of the perturbation: a_k cos kφ + b_k sin kφ.
#[derive(Clone)]
pub struct HarmonicCoefficient {
    pub index: u32,
    pub a: CoefficientFn,
    pub b: CoefficientFn,
}

impl HarmonicCoefficient {
    pub fn new(index: u32, a: CoefficientFn, b: CoefficientFn) -> Self {
        Self { index, a, b }
    }
}

impl std::fmt::Debug for HarmonicCoefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicCoefficient")
            .field("index", &self.index)
            .field("a", &self.a)
            .field("b", &self.b)
            .finish()
    }
}

/// Rectangular evaluation domain D_I × D_τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub i_min: f64,
    pub i_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl Domain {
    pub fn new(i_min: f64, i_max: f64, tau_min: f64, tau_max: f64) -> Result<Self> {
        if !(i_min < i_max) || !i_min.is_finite() || !i_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "action interval [{i_min}, {i_max}] is not a finite nonempty interval"
            )));
        }
        if !(tau_min < tau_max) || !tau_min.is_finite() || !tau_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "slow-time interval [{tau_min}, {tau_max}] is not a finite nonempty interval"
            )));
        }
        Ok(Self {
            i_min,
            i_max,
            tau_min,
            tau_max,
        })
    }

    pub fn contains_i(&self, i: f64) -> bool {
        i >= self.i_min && i <= self.i_max
    }

    pub fn contains_tau(&self, tau: f64) -> bool {
        tau >= self.tau_min && tau <= self.tau_max
    }

    pub fn check(&self, i: f64, tau: f64) -> Result<()> {
        if !self.contains_i(i) {
            return Err(Error::Domain {
                name: "I",
                value: i,
                lo: self.i_min,
                hi: self.i_max,
            });
        }
        if !self.contains_tau(tau) {
            return Err(Error::Domain {
                name: "tau",
                value: tau,
                lo: self.tau_min,
                hi: self.tau_max,
            });
        }
        Ok(())
    }
}

/// Location and slope of the resonance inside an integration window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceGeometry {
    pub tau_star: f64,
    pub omega_prime_star: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
    /// Whether τ₊ − τ* = τ* − τ₋ within [`SYMMETRY_TOL`].
    pub symmetric: bool,
}

impl ResonanceGeometry {
    /// Fast-time resonance instant t* = τ*/ε.
    pub fn t_star(&self, eps: f64) -> f64 {
        self.tau_star / eps
    }

    /// Window half-widths (τ* − τ₋, τ₊ − τ*).
    pub fn half_widths(&self) -> (f64, f64) {
        (self.tau_star - self.tau_minus, self.tau_plus - self.tau_star)
    }
}

/// The full system description: frequency profile plus Fourier perturbation.
#[derive(Clone)]
pub struct HarmonicModel {
    frequency: FrequencyProfile,
    mean: CoefficientFn,
    harmonics: Vec<HarmonicCoefficient>,
    domain: Domain,
}

impl std::fmt::Debug for HarmonicModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicModel")
            .field("frequency", &self.frequency)
            .field("harmonics", &self.harmonics)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl HarmonicModel {
    /// Builds a model and validates that ω has exactly one (non-degenerate)
    /// root inside D_τ. Root count is checked by sign scanning on a fixed
    /// grid, the root itself located by bisection.
    pub fn new(
        frequency: FrequencyProfile,
        mean: CoefficientFn,
        harmonics: Vec<HarmonicCoefficient>,
        domain: Domain,
    ) -> Result<Self> {
        for h in &harmonics {
            if h.index == 0 {
                return Err(Error::InvalidArgument(
                    "harmonic index must be >= 1 (the mean holds k = 0)".into(),
                ));
            }
        }
        let mut seen: Vec<u32> = harmonics.iter().map(|h| h.index).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != harmonics.len() {
            return Err(Error::InvalidArgument(
                "duplicate harmonic index".into(),
            ));
        }

        let model = Self {
            frequency,
            mean,
            harmonics,
            domain,
        };
        model.validate_single_root()?;
        Ok(model)
    }

    fn validate_single_root(&self) -> Result<()> {
        const SCAN: usize = 512;
        let (lo, hi) = (self.domain.tau_min, self.domain.tau_max);
        let step = (hi - lo) / SCAN as f64;
        let mut crossings = 0usize;
        let mut bracket = None;
        let mut prev = self.frequency.omega(lo);
        for j in 1..=SCAN {
            let tau = lo + step * j as f64;
            let cur = self.frequency.omega(tau);
            if prev == 0.0 || prev * cur < 0.0 {
                crossings += 1;
                bracket = Some((tau - step, tau));
            }
            prev = cur;
        }
        match (crossings, bracket) {
            (1, Some((a, b))) => {
                let tau_root = bisect_omega(&self.frequency, a, b);
                let slope = self.frequency.omega_prime(tau_root);
                if slope.abs() < OMEGA_PRIME_FLOOR {
                    return Err(Error::DegenerateResonance { omega_prime: slope });
                }
                Ok(())
            }
            (0, _) => Err(Error::NoSignChange { lo, hi }),
            _ => Err(Error::InvalidArgument(format!(
                "omega changes sign {crossings} times on [{lo}, {hi}]; exactly one resonance is required"
            ))),
        }
    }

    pub fn frequency(&self) -> &FrequencyProfile {
        &self.frequency
    }

    pub fn harmonics(&self) -> &[HarmonicCoefficient] {
        &self.harmonics
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn check_domain(&self, i: f64, tau: f64) -> Result<()> {
        self.domain.check(i, tau)
    }

    /// H₁(I, φ, τ) by harmonic summation.
    pub fn h1(&self, i: f64, phi: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let mut sum = self.mean.value(i, tau);
        for h in &self.harmonics {
            let k = h.index as f64;
            sum += h.a.value(i, tau) * (k * phi).cos() + h.b.value(i, tau) * (k * phi).sin();
        }
        Ok(sum)
    }

    /// ∂H₁/∂φ from the same harmonic data.
    pub fn h1_dphi(&self, i: f64, phi: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let mut sum = 0.0;
        for h in &self.harmonics {
            let k = h.index as f64;
            sum += k * (h.b.value(i, tau) * (k * phi).cos() - h.a.value(i, tau) * (k * phi).sin());
        }
        Ok(sum)
    }

    /// ∂H₁/∂I from coefficient derivatives (analytic or finite-difference).
    pub fn h1_di(&self, i: f64, phi: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let mut sum = self.mean.d1(i, tau);
        for h in &self.harmonics {
            let k = h.index as f64;
            sum += h.a.d1(i, tau) * (k * phi).cos() + h.b.d1(i, tau) * (k * phi).sin();
        }
        Ok(sum)
    }

    /// (∂H₁/∂φ, ∂H₁/∂I) in one pass over the harmonics; the integrator's
    /// right-hand side calls this once per stage.
    pub fn h1_flow(&self, i: f64, phi: f64, tau: f64) -> Result<(f64, f64)> {
        self.check_domain(i, tau)?;
        let mut dphi = 0.0;
        let mut di = self.mean.d1(i, tau);
        for h in &self.harmonics {
            let k = h.index as f64;
            let (s, c) = (k * phi).sin_cos();
            dphi += k * (h.b.value(i, tau) * c - h.a.value(i, tau) * s);
            di += h.a.d1(i, tau) * c + h.b.d1(i, tau) * s;
        }
        Ok((dphi, di))
    }

    /// φ-average H̄₁(I, τ) = a₀(I, τ).
    pub fn h1_mean(&self, i: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        Ok(self.mean.value(i, tau))
    }

    /// ∂H̄₁/∂I.
    pub fn h1_mean_di(&self, i: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        Ok(self.mean.d1(i, tau))
    }

    /// Zero-mean part H̃₁ = H₁ − H̄₁.
    pub fn h1_tilde(&self, i: f64, phi: f64, tau: f64) -> Result<f64> {
        Ok(self.h1(i, phi, tau)? - self.mean.value(i, tau))
    }

    fn omega_checked(&self, tau: f64) -> Result<f64> {
        let w = self.frequency.omega(tau);
        if w.abs() < OMEGA_FLOOR {
            return Err(Error::Singularity { tau, omega: w });
        }
        Ok(w)
    }

    /// u₁ = H̃₁/ω. Errors at (numerical) resonance.
    pub fn u1(&self, i: f64, phi: f64, tau: f64) -> Result<f64> {
        let w = self.omega_checked(tau)?;
        Ok(self.h1_tilde(i, phi, tau)? / w)
    }

    /// v₁, the zero-mean angle correction; per harmonic
    /// v₁ = Σ_k [b_k' cos kφ − a_k' sin kφ] / (k ω).
    ///
    /// This is the closed form of −∫₀^φ ∂u₁/∂I dψ plus its φ-average: the
    /// antiderivative divides each harmonic by k and the constant of
    /// integration cancels against the average.
    pub fn v1(&self, i: f64, phi: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let w = self.omega_checked(tau)?;
        let mut sum = 0.0;
        for h in &self.harmonics {
            let k = h.index as f64;
            sum += (h.b.d1(i, tau) * (k * phi).cos() - h.a.d1(i, tau) * (k * phi).sin()) / k;
        }
        Ok(sum / w)
    }

    /// ⟨H̃₁²⟩^φ(I, τ) = ½ Σ_k (a_k² + b_k²)  (Parseval).
    pub fn m2(&self, i: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let mut sum = 0.0;
        for h in &self.harmonics {
            let (a, b) = (h.a.value(i, tau), h.b.value(i, tau));
            sum += a * a + b * b;
        }
        Ok(0.5 * sum)
    }

    /// ∂⟨H̃₁²⟩^φ/∂I = Σ_k (a_k a_k' + b_k b_k').
    pub fn m2_di(&self, i: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let mut sum = 0.0;
        for h in &self.harmonics {
            sum += h.a.value(i, tau) * h.a.d1(i, tau) + h.b.value(i, tau) * h.b.d1(i, tau);
        }
        Ok(sum)
    }

    /// ∂²⟨H̃₁²⟩^φ/∂I² = Σ_k (a_k'² + a_k a_k'' + b_k'² + b_k b_k'').
    pub fn m2_di2(&self, i: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let mut sum = 0.0;
        for h in &self.harmonics {
            let (a, a1, a2) = (h.a.value(i, tau), h.a.d1(i, tau), h.a.d2(i, tau));
            let (b, b1, b2) = (h.b.value(i, tau), h.b.d1(i, tau), h.b.d2(i, tau));
            sum += a1 * a1 + a * a2 + b1 * b1 + b * b2;
        }
        Ok(sum)
    }

    /// ∂³⟨H̃₁²⟩^φ/∂I³ = Σ_k (3 a_k' a_k'' + a_k a_k''' + 3 b_k' b_k'' + b_k b_k''').
    pub fn m2_di3(&self, i: f64, tau: f64) -> Result<f64> {
        self.check_domain(i, tau)?;
        let mut sum = 0.0;
        for h in &self.harmonics {
            let (a, a1, a2, a3) = (
                h.a.value(i, tau),
                h.a.d1(i, tau),
                h.a.d2(i, tau),
                h.a.d3(i, tau),
            );
            let (b, b1, b2, b3) = (
                h.b.value(i, tau),
                h.b.d1(i, tau),
                h.b.d2(i, tau),
                h.b.d3(i, tau),
            );
            sum += 3.0 * a1 * a2 + a * a3 + 3.0 * b1 * b2 + b * b3;
        }
        Ok(sum)
    }

    /// R₂ = −(1/2ω) ∂⟨H̃₁²⟩^φ/∂I.
    pub fn r2(&self, i: f64, tau: f64) -> Result<f64> {
        let w = self.omega_checked(tau)?;
        Ok(-self.m2_di(i, tau)? / (2.0 * w))
    }

    /// ∂R₂/∂I = −(1/2ω) ∂²⟨H̃₁²⟩^φ/∂I². Errors at resonance; the
    /// principal-value integrator owns the singular limit, not this evaluator.
    pub fn r2_di(&self, i: f64, tau: f64) -> Result<f64> {
        let w = self.omega_checked(tau)?;
        Ok(-self.m2_di2(i, tau)? / (2.0 * w))
    }

    /// Maximum relative disagreement between analytic I-derivative suppliers
    /// and their finite-difference fallbacks over a grid on
    /// `i_range` × D_τ. The caller picks the action band: the fixed FD steps
    /// cannot hold a uniform tolerance where high derivatives blow up (for
    /// the benchmark amplitude I√(4−I) that happens toward I = 4), so the
    /// band should cover the actions the pipeline actually visits. Only
    /// coefficients that carry analytic suppliers contribute.
    pub fn cross_check_derivatives(&self, i_range: (f64, f64), n_i: usize, n_tau: usize) -> f64 {
        let d = &self.domain;
        let mut worst: f64 = 0.0;
        let coeffs: Vec<&CoefficientFn> = std::iter::once(&self.mean)
            .chain(self.harmonics.iter().flat_map(|h| [&h.a, &h.b]))
            .collect();
        for ii in 0..n_i {
            let fr = (ii as f64 + 0.5) / n_i as f64;
            let i = i_range.0 + fr * (i_range.1 - i_range.0);
            for jj in 0..n_tau {
                let fr = (jj as f64 + 0.5) / n_tau as f64;
                let tau = d.tau_min + fr * (d.tau_max - d.tau_min);
                for c in &coeffs {
                    worst = worst.max(c.cross_check(i, tau));
                }
            }
        }
        worst
    }
}

fn bisect_omega(freq: &FrequencyProfile, mut lo: f64, mut hi: f64) -> f64 {
    let (mut flo, fhi) = (freq.omega(lo), freq.omega(hi));
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let fmid = freq.omega(mid);
        if fmid.abs() < ROOT_TOL || (hi - lo) < ROOT_TOL || mid <= lo || mid >= hi {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
}

/// Locates the resonance τ* inside `window` and records its slope.
///
/// Requires a sign change of ω across the window; fails with
/// [`Error::DegenerateResonance`] when |ω'(τ*)| is below the floor.
pub fn find_resonance(model: &HarmonicModel, window: (f64, f64)) -> Result<ResonanceGeometry> {
    let (tau_minus, tau_plus) = window;
    if !(tau_minus < tau_plus) {
        return Err(Error::InvalidArgument(format!(
            "window [{tau_minus}, {tau_plus}] is empty"
        )));
    }
    model.domain().check(model.domain().i_min, tau_minus)?;
    model.domain().check(model.domain().i_min, tau_plus)?;

    let freq = model.frequency();
    let (wlo, whi) = (freq.omega(tau_minus), freq.omega(tau_plus));
    if wlo == 0.0 || whi == 0.0 || wlo * whi > 0.0 {
        return Err(Error::NoSignChange {
            lo: tau_minus,
            hi: tau_plus,
        });
    }

    let tau_star = bisect_omega(freq, tau_minus, tau_plus);
    let omega_prime_star = freq.omega_prime(tau_star);
    if omega_prime_star.abs() < OMEGA_PRIME_FLOOR {
        return Err(Error::DegenerateResonance {
            omega_prime: omega_prime_star,
        });
    }

    let symmetric = ((tau_plus - tau_star) - (tau_star - tau_minus)).abs() <= SYMMETRY_TOL;
    Ok(ResonanceGeometry {
        tau_star,
        omega_prime_star,
        tau_minus,
        tau_plus,
        symmetric,
    })
}
