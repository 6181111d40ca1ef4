use alloc::boxed::Box;
use alloc::string::String;

use crate::sim::SimTrace;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Assumption of an input-to-state stable observer is violated.
    #[error("observer error dynamics A - KC are not Hurwitz (spectral abscissa {abscissa})")]
    UnstableObserver { abscissa: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NumericalFailure { what: &'static str, iterations: usize },

    /// The peak-to-peak quadrature could not reach the requested tolerance.
    #[error("norm quadrature stalled at {value} (tail bound {tail_bound}, step change {step_change})")]
    NormNotConverged {
        value: f64,
        tail_bound: f64,
        step_change: f64,
    },

    #[error("{what} is ill-conditioned (condition number {condition:e})")]
    IllConditioned { what: &'static str, condition: f64 },

    #[error("not implemented: {0}")]
    NotImplemented(&'static str),

    #[error("safety filter infeasible: {0}")]
    InfeasibleFilter(String),

    /// A simulation produced a non-finite state; the trace holds every
    /// sample recorded before the blow-up.
    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64, trace: Box<SimTrace> },
}
