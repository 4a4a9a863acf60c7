//! Command-line front end for the resonance-crossing library: prediction,
//! reference integration, the convergence sweep, and the self-check suite,
//! driven by one JSON configuration with flag overrides.

pub mod app;
pub mod config;
pub mod plot;
