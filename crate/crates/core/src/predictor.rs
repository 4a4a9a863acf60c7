//! Forward prediction of the post-resonance state to O(ε^{3/2}).
//!
//! Everything here is assembled from window-entry data (I₋, φ₋ at τ₋)
//! alone. The check quantities resolve the implicit mid-crossing state,
//!
//! ```text
//! φ̌₊  = φ₋ + Φ(τ₊)/ε + ∫_{τ₋}^{τ₊} ∂H̄₁(I₋,τ)/∂I dτ
//! φ̌̌* = φ₋ + Φ(τ*)/ε + ∫_{τ₋}^{τ*} ∂H̄₁(I₋,τ)/∂I dτ
//! φ̌*  = φ̌̌* + (√ε/2)·T_I(I₋, φ̌̌*) + (ε ln ε/(4ω'*))·∂²⟨H̃₁²⟩/∂I²(I₋,τ*)
//! Ǐ*  = I₋ − (√ε/2)·T_φ(I₋, φ̌*)
//! ```
//!
//! with T_φ, T_I the closed-form θ-integrals of the `oscint` module and
//! Φ(τ) = ∫_{τ₋}^{τ} ω. The predicted endpoint follows as
//!
//! ```text
//! I₊ = I₋ + ε u₁(I₋,φ₋,τ₋) − ε u₁(I₋,φ̌₊,τ₊) − √ε·T_φ(Ǐ*, φ̌*)
//! φ₊ = φ₋ + ε v₁(I₋,φ₋,τ₋) − ε v₁(I₋,φ̌₊,τ₊) + Φ(τ₊)/ε
//!      + ∫_{τ₋}^{τ*} ∂H̄₁(J₋,τ)/∂I dτ + ∫_{τ*}^{τ₊} ∂H̄₁(J̌₊,τ)/∂I dτ
//!      + √ε·T_I(Ǐ*, φ̌*) + p.v. ε ∫ ∂R₂(I₋,τ)/∂I dτ
//!      − (ε^{3/2} ln ε/(4ω'*))·∂³⟨H̃₁²⟩/∂I³(I₋,τ*)·T_φ(I₋, φ̌*)
//! ```
//!
//! where J₋ = I₋ + εu₁(I₋,φ₋,τ₋) and J̌₊ = J₋ − √ε·T_φ(Ǐ*, φ̌*). The
//! mid-crossing estimates and the endpoint residual forms used by the
//! verification suite live here too, sharing every piece.

use crate::error::{Error, Result};
use crate::model::{HarmonicModel, ResonanceGeometry, SYMMETRY_TOL};
use crate::odesim::phase_accumulator;
use crate::oscint::{pv_integral, theta_integral_di, theta_integral_dphi, PvIntegrand};
use crate::quad;

/// Tolerance of the slow-time quadratures (mean drift terms).
const MEAN_QUAD_TOL: f64 = 1e-12;

/// One prediction problem: model, small parameter, entry data, window.
#[derive(Clone)]
pub struct PredictionInputs<'a> {
    pub model: &'a HarmonicModel,
    pub eps: f64,
    pub i_minus: f64,
    pub phi_minus: f64,
    pub geometry: ResonanceGeometry,
}

impl<'a> PredictionInputs<'a> {
    /// Validates the standing assumptions: ε ∈ (0, 0.1], entry state in the
    /// domain, and a window symmetric about τ* (the formulas above are
    /// derived under τ₊ − τ* = τ* − τ₋).
    pub fn new(
        model: &'a HarmonicModel,
        eps: f64,
        i_minus: f64,
        phi_minus: f64,
        geometry: ResonanceGeometry,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.1) {
            return Err(Error::Domain {
                name: "eps",
                value: eps,
                lo: 0.0,
                hi: 0.1,
            });
        }
        model.check_domain(i_minus, geometry.tau_minus)?;
        let (left, right) = geometry.half_widths();
        if (left - right).abs() > SYMMETRY_TOL {
            return Err(Error::AsymmetricWindow { left, right });
        }
        Ok(Self {
            model,
            eps,
            i_minus,
            phi_minus,
            geometry,
        })
    }

    fn phase(&self, tau: f64) -> Result<f64> {
        phase_accumulator(self.model, self.geometry.tau_minus, tau)
    }

    /// ∫_{a}^{b} ∂H̄₁(j, τ)/∂I dτ with the action argument held fixed.
    fn mean_drift(&self, j: f64, a: f64, b: f64) -> Result<f64> {
        if !self.model.domain().contains_i(j) {
            return Err(Error::Domain {
                name: "I",
                value: j,
                lo: self.model.domain().i_min,
                hi: self.model.domain().i_max,
            });
        }
        let f = |tau: f64| {
            self.model
                .h1_mean_di(j, tau)
                .expect("window and action verified in domain")
        };
        if a <= b {
            quad::adaptive(&f, a, b, MEAN_QUAD_TOL)
        } else {
            Ok(-quad::adaptive(&f, b, a, MEAN_QUAD_TOL)?)
        }
    }
}

/// φ̌₊: zeroth-order transport of the angle to the window exit.
pub fn check_phi_plus(inputs: &PredictionInputs) -> Result<f64> {
    let g = &inputs.geometry;
    Ok(inputs.phi_minus
        + inputs.phase(g.tau_plus)? / inputs.eps
        + inputs.mean_drift(inputs.i_minus, g.tau_minus, g.tau_plus)?)
}

/// φ̌̌*: zeroth-order transport of the angle to the crossing.
pub fn check_phi_star_double(inputs: &PredictionInputs) -> Result<f64> {
    let g = &inputs.geometry;
    Ok(inputs.phi_minus
        + inputs.phase(g.tau_star)? / inputs.eps
        + inputs.mean_drift(inputs.i_minus, g.tau_minus, g.tau_star)?)
}

/// φ̌*: the crossing phase including the √ε Fresnel shift and the ε ln ε
/// correction. Natural logarithm; ln ε < 0.
pub fn check_phi_star(inputs: &PredictionInputs) -> Result<f64> {
    let g = &inputs.geometry;
    let double = check_phi_star_double(inputs)?;
    let di = theta_integral_di(inputs.model, inputs.i_minus, double, g)?;
    let m2_2 = inputs.model.m2_di2(inputs.i_minus, g.tau_star)?;
    Ok(double
        + 0.5 * inputs.eps.sqrt() * di
        + inputs.eps * inputs.eps.ln() / (4.0 * g.omega_prime_star) * m2_2)
}

/// Ǐ*: the crossing action. Errors when the result leaves the domain box
/// (the prediction is then invalid at this ε).
pub fn check_i_star(inputs: &PredictionInputs, phi_star_check: f64) -> Result<f64> {
    let g = &inputs.geometry;
    let dphi = theta_integral_dphi(inputs.model, inputs.i_minus, phi_star_check, g)?;
    let i_star = inputs.i_minus - 0.5 * inputs.eps.sqrt() * dphi;
    inputs.model.check_domain(i_star, g.tau_star)?;
    Ok(i_star)
}

/// Named additive terms of the action prediction; their sum is I₊.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBreakdown {
    /// I₋
    pub entry_action: f64,
    /// +ε u₁(I₋, φ₋, τ₋)
    pub u1_entry: f64,
    /// −ε u₁(I₋, φ̌₊, τ₊)
    pub u1_exit: f64,
    /// −√ε·T_φ(Ǐ*, φ̌*), the resonant jump
    pub crossing_jump: f64,
}

impl ActionBreakdown {
    pub fn terms(&self) -> [(&'static str, f64); 4] {
        [
            ("entry_action", self.entry_action),
            ("u1_entry", self.u1_entry),
            ("u1_exit", self.u1_exit),
            ("crossing_jump", self.crossing_jump),
        ]
    }

    pub fn total(&self) -> f64 {
        self.terms().iter().map(|(_, v)| v).sum()
    }
}

/// Named additive terms of the angle prediction; their sum is φ₊.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBreakdown {
    /// φ₋
    pub entry_angle: f64,
    /// +ε v₁(I₋, φ₋, τ₋)
    pub v1_entry: f64,
    /// −ε v₁(I₋, φ̌₊, τ₊)
    pub v1_exit: f64,
    /// Φ(τ₊)/ε, the fast rotation
    pub rotation: f64,
    /// ∫_{τ₋}^{τ*} ∂H̄₁(J₋,τ)/∂I dτ
    pub mean_drift_entry: f64,
    /// ∫_{τ*}^{τ₊} ∂H̄₁(J̌₊,τ)/∂I dτ
    pub mean_drift_exit: f64,
    /// +√ε·T_I(Ǐ*, φ̌*)
    pub crossing_shift: f64,
    /// p.v. ε ∫ ∂R₂(I₋,τ)/∂I dτ
    pub principal_value: f64,
    /// −(ε^{3/2} ln ε/(4ω'*))·∂³⟨H̃₁²⟩/∂I³(I₋,τ*)·T_φ(I₋,φ̌*)
    pub log_correction: f64,
}

impl AngleBreakdown {
    pub fn terms(&self) -> [(&'static str, f64); 9] {
        [
            ("entry_angle", self.entry_angle),
            ("v1_entry", self.v1_entry),
            ("v1_exit", self.v1_exit),
            ("rotation", self.rotation),
            ("mean_drift_entry", self.mean_drift_entry),
            ("mean_drift_exit", self.mean_drift_exit),
            ("crossing_shift", self.crossing_shift),
            ("principal_value", self.principal_value),
            ("log_correction", self.log_correction),
        ]
    }

    pub fn total(&self) -> f64 {
        self.terms().iter().map(|(_, v)| v).sum()
    }
}

/// Everything `predict` produces, with the full term breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub eps: f64,
    pub i_minus: f64,
    pub phi_minus: f64,
    pub phi_plus_check: f64,
    pub phi_star_double_check: f64,
    pub phi_star_check: f64,
    pub i_star_check: f64,
    pub j_minus: f64,
    pub j_plus_check: f64,
    /// I₊ to O(ε^{3/2}).
    pub i_plus: f64,
    /// φ₊ to O(ε^{3/2}).
    pub phi_plus: f64,
    /// Unsymmetrized O(ε) baseline.
    pub i_plus_classical: f64,
    /// Mid-crossing action estimate (entry-side data).
    pub i_star_estimate: f64,
    /// Mid-crossing angle estimate (entry-side data).
    pub phi_star_estimate: f64,
    pub action_terms: ActionBreakdown,
    pub angle_terms: AngleBreakdown,
}

impl PredictionReport {
    /// Flat (name, value) view: scalars first, then the named terms.
    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("eps", self.eps),
            ("i_minus", self.i_minus),
            ("phi_minus", self.phi_minus),
            ("phi_plus_check", self.phi_plus_check),
            ("phi_star_double_check", self.phi_star_double_check),
            ("phi_star_check", self.phi_star_check),
            ("i_star_check", self.i_star_check),
            ("j_minus", self.j_minus),
            ("j_plus_check", self.j_plus_check),
            ("i_plus", self.i_plus),
            ("phi_plus", self.phi_plus),
            ("i_plus_classical", self.i_plus_classical),
            ("i_star_estimate", self.i_star_estimate),
            ("phi_star_estimate", self.phi_star_estimate),
        ];
        for (name, v) in self.action_terms.terms() {
            out.push((name, v));
        }
        for (name, v) in self.angle_terms.terms() {
            out.push((name, v));
        }
        out
    }

    pub fn csv_header() -> String {
        // Field names are compile-time constants; build the header from the
        // same list the row uses so they cannot drift apart.
        let probe = Self::zeroed();
        probe
            .fields()
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields()
            .iter()
            .map(|(_, v)| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn pretty(&self) -> String {
        let mut s = String::new();
        for (name, v) in self.fields() {
            s.push_str(&format!("{name:24} = {v:+.16e}\n"));
        }
        s
    }

    fn zeroed() -> Self {
        PredictionReport {
            eps: 0.0,
            i_minus: 0.0,
            phi_minus: 0.0,
            phi_plus_check: 0.0,
            phi_star_double_check: 0.0,
            phi_star_check: 0.0,
            i_star_check: 0.0,
            j_minus: 0.0,
            j_plus_check: 0.0,
            i_plus: 0.0,
            phi_plus: 0.0,
            i_plus_classical: 0.0,
            i_star_estimate: 0.0,
            phi_star_estimate: 0.0,
            action_terms: ActionBreakdown {
                entry_action: 0.0,
                u1_entry: 0.0,
                u1_exit: 0.0,
                crossing_jump: 0.0,
            },
            angle_terms: AngleBreakdown {
                entry_angle: 0.0,
                v1_entry: 0.0,
                v1_exit: 0.0,
                rotation: 0.0,
                mean_drift_entry: 0.0,
                mean_drift_exit: 0.0,
                crossing_shift: 0.0,
                principal_value: 0.0,
                log_correction: 0.0,
            },
        }
    }
}

/// The full O(ε^{3/2}) forward prediction.
pub fn predict_crossing(inputs: &PredictionInputs) -> Result<PredictionReport> {
    let m = inputs.model;
    let g = &inputs.geometry;
    let (eps, i_minus, phi_minus) = (inputs.eps, inputs.i_minus, inputs.phi_minus);
    let sqrt_eps = eps.sqrt();

    let phi_plus_check = check_phi_plus(inputs)?;
    let phi_star_double_check = check_phi_star_double(inputs)?;
    let phi_star_check = check_phi_star(inputs)?;
    let i_star_check = check_i_star(inputs, phi_star_check)?;

    let jump = sqrt_eps * theta_integral_dphi(m, i_star_check, phi_star_check, g)?;
    let j_minus = i_minus + eps * m.u1(i_minus, phi_minus, g.tau_minus)?;
    let j_plus_check = j_minus - jump;

    let action_terms = ActionBreakdown {
        entry_action: i_minus,
        u1_entry: eps * m.u1(i_minus, phi_minus, g.tau_minus)?,
        u1_exit: -eps * m.u1(i_minus, phi_plus_check, g.tau_plus)?,
        crossing_jump: -jump,
    };

    let freq = m.frequency().clone();
    let pv_model = m.clone();
    let pv = PvIntegrand::new(
        move |tau: f64| {
            -0.5 * eps
                * pv_model
                    .m2_di2(i_minus, tau)
                    .expect("entry action verified in domain")
        },
        freq,
        g.tau_star,
        g.omega_prime_star,
    )?;
    let principal_value = pv_integral(&pv, (g.tau_minus, g.tau_plus))?;

    let log_correction = -(eps.powf(1.5) * eps.ln() / (4.0 * g.omega_prime_star))
        * m.m2_di3(i_minus, g.tau_star)?
        * theta_integral_dphi(m, i_minus, phi_star_check, g)?;

    let angle_terms = AngleBreakdown {
        entry_angle: phi_minus,
        v1_entry: eps * m.v1(i_minus, phi_minus, g.tau_minus)?,
        v1_exit: -eps * m.v1(i_minus, phi_plus_check, g.tau_plus)?,
        rotation: inputs.phase(g.tau_plus)? / eps,
        mean_drift_entry: inputs.mean_drift(j_minus, g.tau_minus, g.tau_star)?,
        mean_drift_exit: inputs.mean_drift(j_plus_check, g.tau_star, g.tau_plus)?,
        crossing_shift: sqrt_eps * theta_integral_di(m, i_star_check, phi_star_check, g)?,
        principal_value,
        log_correction,
    };

    let (i_star_estimate, phi_star_estimate) = crossing_state_estimates(inputs, Side::Minus, None)?;

    Ok(PredictionReport {
        eps,
        i_minus,
        phi_minus,
        phi_plus_check,
        phi_star_double_check,
        phi_star_check,
        i_star_check,
        j_minus,
        j_plus_check,
        i_plus: action_terms.total(),
        phi_plus: angle_terms.total(),
        i_plus_classical: classical_jump(inputs)?,
        i_star_estimate,
        phi_star_estimate,
        action_terms,
        angle_terms,
    })
}

/// The unsymmetrized O(ε) jump formula, evaluated as a forward prediction:
/// the unknown on-trajectory crossing phase is replaced by the zeroth-order
/// transport φ̌̌* (a choice; the O(ε) order is insensitive to it).
pub fn classical_jump(inputs: &PredictionInputs) -> Result<f64> {
    let double = check_phi_star_double(inputs)?;
    let dphi = theta_integral_dphi(inputs.model, inputs.i_minus, double, &inputs.geometry)?;
    Ok(inputs.i_minus - inputs.eps.sqrt() * dphi)
}

/// Which endpoint anchors a mid-crossing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// O(ε)-accurate estimates of (I*, φ*) at the crossing.
///
/// The implicit (I*, φ*) on the right-hand sides are replaced by the check
/// quantities (Ǐ*, φ̌*). The minus side is a pure forward estimate; the plus
/// side anchors on a numeric endpoint (I₊, φ₊), passed via `anchors`.
pub fn crossing_state_estimates(
    inputs: &PredictionInputs,
    side: Side,
    anchors: Option<(f64, f64)>,
) -> Result<(f64, f64)> {
    let m = inputs.model;
    let g = &inputs.geometry;
    let eps = inputs.eps;
    let half_sqrt_eps = 0.5 * eps.sqrt();

    let phi_star_check = check_phi_star(inputs)?;
    let i_star_check = check_i_star(inputs, phi_star_check)?;
    let dphi = theta_integral_dphi(m, i_star_check, phi_star_check, g)?;
    let di = theta_integral_di(m, i_star_check, phi_star_check, g)?;
    let log_term =
        eps * eps.ln() / (4.0 * g.omega_prime_star) * m.m2_di2(i_star_check, g.tau_star)?;

    match side {
        Side::Minus => {
            let j_minus =
                inputs.i_minus + eps * m.u1(inputs.i_minus, inputs.phi_minus, g.tau_minus)?;
            let i_star = inputs.i_minus - half_sqrt_eps * dphi;
            let phi_star = inputs.phi_minus
                + inputs.phase(g.tau_star)? / eps
                + inputs.mean_drift(j_minus, g.tau_minus, g.tau_star)?
                + half_sqrt_eps * di
                + log_term;
            Ok((i_star, phi_star))
        }
        Side::Plus => {
            let (i_plus, phi_plus) = anchors.ok_or_else(|| {
                Error::InvalidArgument(
                    "plus-side estimates need numeric (I+, phi+) anchors".into(),
                )
            })?;
            let j_plus = i_plus + eps * m.u1(i_plus, phi_plus, g.tau_plus)?;
            let i_star = i_plus + half_sqrt_eps * dphi;
            let phi_star = phi_plus
                + (inputs.phase(g.tau_star)? - inputs.phase(g.tau_plus)?) / eps
                - inputs.mean_drift(j_plus, g.tau_star, g.tau_plus)?
                - half_sqrt_eps * di
                + log_term;
            Ok((i_star, phi_star))
        }
    }
}

/// Numeric trajectory values the residual forms are evaluated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericAnchors {
    pub i_star: f64,
    pub phi_star: f64,
    pub i_plus: f64,
    pub phi_plus: f64,
}

/// O(ε^{3/2}) remainders of the two endpoint identities, evaluated with the
/// numeric crossing state in every integral argument:
///
/// ```text
/// r_I = [I₊ + εu₁(I₊,φ₊,τ₊)] − [I₋ + εu₁(I₋,φ₋,τ₋) − √ε·T_φ(I*,φ*)]
/// r_φ = [φ₊ + εv₁(I₊,φ₊,τ₊)] − [φ₋ + εv₁(I₋,φ₋,τ₋) + Φ(τ₊)/ε + drifts
///        + √ε·T_I(I*,φ*) + p.v. ε∫∂R₂(I*,τ)/∂I dτ + log term]
/// ```
pub fn prediction_identity_residuals(
    inputs: &PredictionInputs,
    anchors: &NumericAnchors,
) -> Result<(f64, f64)> {
    let m = inputs.model;
    let g = &inputs.geometry;
    let eps = inputs.eps;
    let sqrt_eps = eps.sqrt();
    let &NumericAnchors {
        i_star,
        phi_star,
        i_plus,
        phi_plus,
    } = anchors;

    let lhs_i = i_plus + eps * m.u1(i_plus, phi_plus, g.tau_plus)?;
    let rhs_i = inputs.i_minus + eps * m.u1(inputs.i_minus, inputs.phi_minus, g.tau_minus)?
        - sqrt_eps * theta_integral_dphi(m, i_star, phi_star, g)?;
    let r_i = lhs_i - rhs_i;

    let j_minus = inputs.i_minus + eps * m.u1(inputs.i_minus, inputs.phi_minus, g.tau_minus)?;
    let j_plus = i_plus + eps * m.u1(i_plus, phi_plus, g.tau_plus)?;

    let freq = m.frequency().clone();
    let pv_model = m.clone();
    let pv = PvIntegrand::new(
        move |tau: f64| {
            -0.5 * eps
                * pv_model
                    .m2_di2(i_star, tau)
                    .expect("crossing action verified in domain")
        },
        freq,
        g.tau_star,
        g.omega_prime_star,
    )?;
    m.check_domain(i_star, g.tau_star)?;

    let log_correction = -(eps.powf(1.5) * eps.ln() / (4.0 * g.omega_prime_star))
        * m.m2_di3(i_star, g.tau_star)?
        * theta_integral_dphi(m, i_star, phi_star, g)?;

    let lhs_phi = phi_plus + eps * m.v1(i_plus, phi_plus, g.tau_plus)?;
    let rhs_phi = inputs.phi_minus
        + eps * m.v1(inputs.i_minus, inputs.phi_minus, g.tau_minus)?
        + inputs.phase(g.tau_plus)? / eps
        + inputs.mean_drift(j_minus, g.tau_minus, g.tau_star)?
        + inputs.mean_drift(j_plus, g.tau_star, g.tau_plus)?
        + sqrt_eps * theta_integral_di(m, i_star, phi_star, g)?
        + pv_integral(&pv, (g.tau_minus, g.tau_plus))?
        + log_correction;
    let r_phi = lhs_phi - rhs_phi;

    Ok((r_i, r_phi))
}
