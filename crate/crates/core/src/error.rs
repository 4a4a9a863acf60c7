//! Error type shared by all evaluators and drivers.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A coordinate left its configured interval.
    #[error("{name} = {value} outside domain [{lo}, {hi}]")]
    Domain {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Evaluation of a 1/ω quantity at or too close to the resonance.
    #[error("evaluation at resonance: omega({tau}) = {omega}")]
    Singularity { tau: f64, omega: f64 },

    /// Frequency does not change sign over the requested window.
    #[error("omega has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    /// |ω'(τ*)| below the non-degeneracy floor.
    #[error("degenerate resonance: |omega'(tau_*)| = {omega_prime} below floor")]
    DegenerateResonance { omega_prime: f64 },

    /// Prediction requires τ₊ − τ* = τ* − τ₋.
    #[error("asymmetric window: tau_+ - tau_* = {right}, tau_* - tau_- = {left}")]
    AsymmetricWindow { left: f64, right: f64 },

    /// Invalid argument outside the domain-box checks.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: error estimate {achieved} > tolerance {requested}")]
    QuadratureAccuracy { achieved: f64, requested: f64 },

    /// Reference integration left the model domain; carries the last valid state.
    #[error("trajectory left domain at tau = {tau} (last valid I = {i}, chi = {chi})")]
    TrajectoryExit { tau: f64, i: f64, chi: f64 },

    /// Reference integration produced a non-finite state.
    #[error("non-finite state at tau = {tau}")]
    NumericalBlowup { tau: f64 },

    /// Log-log fit requested on data with non-positive errors or too few points.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Sweep cell failure, tagged with its grid coordinates.
    #[error("sweep cell (eps = {eps}, phi = {phi}) failed: {source}")]
    SweepCell {
        eps: f64,
        phi: f64,
        #[source]
        source: Box<Error>,
    },
}
