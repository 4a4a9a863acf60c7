//! Prediction of passage through an isolated resonance in slowly driven
//! one-frequency Hamiltonian systems
//!
//! ```text
//! H(I, φ, τ) = ω(τ)·I + ε·H₁(I, φ, τ),      τ = ε t,   0 < ε ≪ 1,
//! ```
//!
//! where ω crosses zero once at τ* with ω'(τ*) ≠ 0. The crate computes the
//! action and angle past the crossing to O(ε^{3/2}) from data at the window
//! entry alone, and checks that claim against brute-force integration.
//!
//! * [`model`]: Fourier representation of H₁ with derivative suppliers.
//! * [`quad`]: adaptive Gauss-Kronrod quadrature for the slow-time terms.
//! * [`oscint`]: closed-form oscillatory integrals over the fast crossing.
//! * [`odesim`]: de-rotated fixed-step reference integrator.
//! * [`predictor`]: the O(ε^{3/2}) jump formulas and their assembly.
//! * [`experiment`]: ε-sweep harness and convergence-order fits.
//! * [`verify`]: the acceptance checks shared by tests and the CLI.

pub mod error;
pub mod experiment;
pub mod model;
pub mod odesim;
pub mod oscint;
pub mod predictor;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
pub use experiment::{
    fit_slope, run_sweep, CellRecord, ConvergenceTable, ErrorRow, SlopeFit, SweepConfig,
};
pub use model::{
    find_resonance, benchmark_model, poly_coefficient, zero_perturbation, CoefficientFn, Domain,
    FrequencyProfile, HarmonicCoefficient, HarmonicModel, ResonanceGeometry, TauProfile,
};
pub use odesim::{integrate, phase_accumulator, SimConfig, StepPolicy, TrajectorySample};
pub use predictor::{
    check_i_star, check_phi_plus, check_phi_star, check_phi_star_double, classical_jump,
    predict_crossing, prediction_identity_residuals, crossing_state_estimates, NumericAnchors, PredictionInputs,
    PredictionReport, Side,
};
pub use verify::{all_passed, render_table, run_checks, CheckOptions, CheckResult};
