//! Coefficient functions c(I, τ) with I-derivatives on demand.
//!
//! A coefficient carries its value closure and, optionally, analytic
//! derivative closures up to order 3. Missing orders fall back to central
//! differences with a step scaled to the action:
//!
//! * orders 1-2: h = 1e−4 · max(1, |I|)
//! * order 3:    h = 1e−3 · max(1, |I|)
//!
//! The larger third-order step trades truncation error against the h³ in the
//! denominator; both choices keep the fallback well inside the 1e−5 relative
//! band the cross-check tests demand for smooth coefficients.

use std::sync::Arc;

/// Value or derivative closure of (I, τ).
pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

const FD_STEP_LOW: f64 = 1e-4;
const FD_STEP_THIRD: f64 = 1e-3;

#[derive(Clone)]
pub struct CoefficientFn {
    f: Field,
    d1: Option<Field>,
    d2: Option<Field>,
    d3: Option<Field>,
}

impl std::fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientFn")
            .field(
                "analytic_derivatives",
                &(self.d1.is_some() as u8 + self.d2.is_some() as u8 + self.d3.is_some() as u8),
            )
            .finish_non_exhaustive()
    }
}

impl CoefficientFn {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            d1: None,
            d2: None,
            d3: None,
        }
    }

    pub fn with_d1(mut self, d1: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn with_d2(mut self, d2: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn with_d3(mut self, d3: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d3 = Some(Arc::new(d3));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c)
            .with_d1(|_, _| 0.0)
            .with_d2(|_, _| 0.0)
            .with_d3(|_, _| 0.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn value(&self, i: f64, tau: f64) -> f64 {
        (self.f)(i, tau)
    }

    pub fn d1(&self, i: f64, tau: f64) -> f64 {
        match &self.d1 {
            Some(d) => d(i, tau),
            None => self.fd1(i, tau),
        }
    }

    pub fn d2(&self, i: f64, tau: f64) -> f64 {
        match &self.d2 {
            Some(d) => d(i, tau),
            None => self.fd2(i, tau),
        }
    }

    pub fn d3(&self, i: f64, tau: f64) -> f64 {
        match &self.d3 {
            Some(d) => d(i, tau),
            None => self.fd3(i, tau),
        }
    }

    pub fn has_analytic(&self) -> bool {
        self.d1.is_some() || self.d2.is_some() || self.d3.is_some()
    }

    fn fd1(&self, i: f64, tau: f64) -> f64 {
        let h = FD_STEP_LOW * i.abs().max(1.0);
        ((self.f)(i + h, tau) - (self.f)(i - h, tau)) / (2.0 * h)
    }

    fn fd2(&self, i: f64, tau: f64) -> f64 {
        let h = FD_STEP_LOW * i.abs().max(1.0);
        ((self.f)(i + h, tau) - 2.0 * (self.f)(i, tau) + (self.f)(i - h, tau)) / (h * h)
    }

    fn fd3(&self, i: f64, tau: f64) -> f64 {
        let h = FD_STEP_THIRD * i.abs().max(1.0);
        ((self.f)(i + 2.0 * h, tau) - 2.0 * (self.f)(i + h, tau) + 2.0 * (self.f)(i - h, tau)
            - (self.f)(i - 2.0 * h, tau))
            / (2.0 * h * h * h)
    }

    /// Worst relative deviation of the analytic suppliers from their
    /// finite-difference counterparts at one point. Returns 0 when no
    /// analytic supplier is present.
    pub fn cross_check(&self, i: f64, tau: f64) -> f64 {
        let rel = |ana: f64, fd: f64| (ana - fd).abs() / ana.abs().max(1.0);
        let mut worst: f64 = 0.0;
        if let Some(d) = &self.d1 {
            worst = worst.max(rel(d(i, tau), self.fd1(i, tau)));
        }
        if let Some(d) = &self.d2 {
            worst = worst.max(rel(d(i, tau), self.fd2(i, tau)));
        }
        if let Some(d) = &self.d3 {
            worst = worst.max(rel(d(i, tau), self.fd3(i, tau)));
        }
        worst
    }
}

/// Slow-time factors available to the separable-coefficient schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauProfile {
    /// p(τ) = 1.
    Constant,
    /// p(τ) = e^{τ−1} − 1.
    ExpShift,
    /// p(τ) = 1/√(e^{τ−1} + 1).
    InvSqrtExp,
}

impl TauProfile {
    pub fn value(self, tau: f64) -> f64 {
        match self {
            TauProfile::Constant => 1.0,
            TauProfile::ExpShift => (tau - 1.0).exp() - 1.0,
            TauProfile::InvSqrtExp => 1.0 / ((tau - 1.0).exp() + 1.0).sqrt(),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "constant" => Some(TauProfile::Constant),
            "exp_shift" => Some(TauProfile::ExpShift),
            "inv_sqrt_exp" => Some(TauProfile::InvSqrtExp),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TauProfile::Constant => "constant",
            TauProfile::ExpShift => "exp_shift",
            TauProfile::InvSqrtExp => "inv_sqrt_exp",
        }
    }
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &c)| n as f64 * c)
        .collect()
}

/// Separable coefficient P(I)·p(τ) with P a polynomial (ascending
/// coefficients) and p a named slow-time profile. All three I-derivatives
/// are attached analytically, so these coefficients exercise the exact
/// derivative path.
pub fn poly_coefficient(coeffs: &[f64], profile: TauProfile) -> CoefficientFn {
    let p0: Vec<f64> = coeffs.to_vec();
    let p1 = poly_derivative(&p0);
    let p2 = poly_derivative(&p1);
    let p3 = poly_derivative(&p2);
    CoefficientFn::new(move |i, tau| poly_eval(&p0, i) * profile.value(tau))
        .with_d1(move |i, tau| poly_eval(&p1, i) * profile.value(tau))
        .with_d2(move |i, tau| poly_eval(&p2, i) * profile.value(tau))
        .with_d3(move |i, tau| poly_eval(&p3, i) * profile.value(tau))
}
