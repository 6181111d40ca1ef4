use alloc::format;
use alloc::vec::Vec;

use crate::analysis::{ObserverGain, Plant};
use crate::{Error, Result};

/// Robust control barrier function filter for an affine barrier
/// `h(x) = ∇hᵀ x + b` and a constant estimation-error bound `M`.
///
/// The filter enforces `∇hᵀ(A x̂ + B u) ≥ −κ (h(x̂) − L_h M)`, which keeps
/// `h(x̂) ≥ L_h M` and hence `h(x) ≥ 0` while `|x − x̂|_∞ ≤ M`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SafetyFilterConfig {
    pub h_gradient: Vec<f64>,
    pub h_offset: f64,
    pub alpha_gain: f64,
    /// Lipschitz constant of `h` for an ∞-norm error ball, `‖∇h‖₁`.
    pub lipschitz_lh: f64,
    pub error_bound_m: f64,
    pub u_des: Vec<f64>,
}

impl SafetyFilterConfig {
    /// Derives `L_h = ‖∇h‖₁`.
    pub fn new(h_gradient: Vec<f64>, h_offset: f64, alpha_gain: f64, error_bound_m: f64, u_des: Vec<f64>) -> Self {
        let lipschitz_lh = h_gradient.iter().map(|g| g.abs()).sum();
        Self { h_gradient, h_offset, alpha_gain, lipschitz_lh, error_bound_m, u_des }
    }

    pub fn h(&self, x: &[f64]) -> f64 {
        self.h_gradient.iter().zip(x).map(|(g, v)| g * v).sum::<f64>() + self.h_offset
    }

    pub fn with_bound(&self, m: f64) -> Self {
        Self { error_bound_m: m, ..self.clone() }
    }

    pub fn validate(&self, p: &Plant) -> Result<()> {
        if self.h_gradient.len() != p.n_states() || self.u_des.len() != p.n_inputs() {
            return Err(Error::Dimension(format!(
                "safety filter expects gradient of length {} and input of length {}",
                p.n_states(),
                p.n_inputs()
            )));
        }
        let l1: f64 = self.h_gradient.iter().map(|g| g.abs()).sum();
        if (self.lipschitz_lh - l1).abs() > 1e-12 * l1.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "Lipschitz constant {} does not match the 1-norm {l1} of the barrier gradient",
                self.lipschitz_lh
            )));
        }
        let finite = self.h_gradient.iter().chain(&self.u_des).all(|v| v.is_finite())
            && self.h_offset.is_finite()
            && self.error_bound_m.is_finite();
        if !finite {
            return Err(Error::NonFinite("safety filter configuration"));
        }
        if !(self.alpha_gain > 0.0) || !(self.error_bound_m >= 0.0) {
            return Err(Error::InvalidInput("safety filter needs alpha_gain > 0 and error_bound_m >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub u: Vec<f64>,
    /// The constraint modified `u_des`.
    pub active: bool,
}

/// Minimum-norm correction of `u_des` onto the single affine constraint.
pub fn robust_cbf_filter(xhat: &[f64], p: &Plant, f: &SafetyFilterConfig) -> Result<FilterOutput> {
    let grad = &f.h_gradient;
    let drift: f64 = p.a().mul_vec(xhat).iter().zip(grad).map(|(a, g)| a * g).sum();
    // g = Bᵀ ∇h
    let g: Vec<f64> = (0..p.n_inputs()).map(|j| (0..p.n_states()).map(|i| p.b()[(i, j)] * grad[i]).sum()).collect();
    let lhs: f64 = drift + g.iter().zip(&f.u_des).map(|(a, b)| a * b).sum::<f64>();
    let rhs = -f.alpha_gain * (f.h(xhat) - f.lipschitz_lh * f.error_bound_m);
    let gap = rhs - lhs;
    if gap <= 0.0 {
        return Ok(FilterOutput { u: f.u_des.clone(), active: false });
    }
    let g2: f64 = g.iter().map(|v| v * v).sum();
    if g2 == 0.0 {
        return Err(Error::InfeasibleFilter(format!(
            "barrier has relative degree above one (∇hᵀB = 0) with constraint violated by {gap}"
        )));
    }
    let u = f.u_des.iter().zip(&g).map(|(ud, gi)| ud + gap / g2 * gi).collect();
    Ok(FilterOutput { u, active: true })
}

/// Threshold-saturating sensor attack that drives `x̂` into the interior
/// of the safe set: `a = ν · sign(Kᵀ ∇h)` with `sign(0) = +1`. It maximises
/// `∇hᵀ K a` over `|a|_∞ ≤ ν`.
pub fn stealthy_deactivation_attack(gain: &ObserverGain, f: &SafetyFilterConfig, nu: f64) -> Vec<f64> {
    let k = gain.k();
    (0..k.ncols())
        .map(|j| {
            let s: f64 = (0..k.nrows()).map(|i| k[(i, j)] * f.h_gradient[i]).sum();
            if s >= 0.0 {
                nu
            } else {
                -nu
            }
        })
        .collect()
}
