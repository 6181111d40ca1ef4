//! Observer gain design: the steady-state Kalman baseline and the
//! attack-aware multi-objective H∞ design, scalarised as `β γ̃ + γ`.

mod kalman;
mod lmi;
mod solver;

use alloc::format;
use alloc::vec::Vec;

pub use kalman::{design_kalman, design_kalman_uniform, uniform_noise_covariances};
pub use lmi::{
    build_synthesis_lmi, theta_attacked, theta_nominal, AffineLmi, LmiProblem, VarLayout, P_MIN_EIG,
    STRICT_MARGIN,
};
pub use solver::{minimize, LmiSolution, SolverOptions, SolverStatus};

use crate::analysis::{ObserverGain, Plant};
use crate::linalg::{eigenvalues, solve_lyapunov, Matrix, SPECTRUM_TOL};
use crate::{Error, Result};

/// Largest acceptable `cond(P)` when recovering `K = P⁻¹ Y`.
pub const MAX_P_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthesisResult {
    pub gain: ObserverGain,
    pub p: Matrix,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub beta: f64,
    pub objective: f64,
    pub solver_iterations: usize,
    /// Bound on `objective − optimum` at the returned point.
    pub gap_bound: f64,
    pub status: SolverStatus,
    /// Most positive eigenvalue over both bounded-real matrices evaluated
    /// with the recovered `K` (no margins), and of `−P`.
    pub max_constraint_eig: f64,
}

impl SynthesisResult {
    pub fn k(&self) -> &Matrix {
        self.gain.k()
    }
}

/// Solves the problem from [`build_synthesis_lmi`] and recovers the gain.
///
/// The barrier method starts from `K = 0` with `P` the Lyapunov solution of
/// `AᵀP + PA = −I`, which is strictly feasible for large enough `γ`, `γ̃`
/// whenever `A` is Hurwitz. A non-Hurwitz `A` makes the attacked constraint
/// infeasible, since its leading block `PA + AᵀP ≺ 0` with `P ≻ 0` is a
/// Lyapunov inequality.
pub fn solve_lmi(prob: &LmiProblem, opts: &SolverOptions) -> Result<SynthesisResult> {
    let plant = &prob.plant;
    let a = plant.a();
    let abscissa = eigenvalues(a)?.spectral_abscissa;
    if !(abscissa < -SPECTRUM_TOL) {
        return Err(Error::Infeasible(format!(
            "attacked bounded-real constraint requires Hurwitz A (spectral abscissa {abscissa})"
        )));
    }
    let n = plant.n_states();
    let mut p0 = solve_lyapunov(&a.transpose(), &Matrix::identity(n))?;
    let min_eig = p0.symmetric_eigen().min();
    if min_eig < 10.0 * P_MIN_EIG {
        p0 = p0.scale(10.0 * P_MIN_EIG / min_eig);
    }
    let layout = prob.layout;
    let mut x0 = layout.pack(&p0, &Matrix::zeros(n, plant.n_outputs()), 1.0, 1.0);
    if !solver::raise_until_feasible(prob, &mut x0, &[layout.gamma_index(), layout.gamma_tilde_index()]) {
        return Err(Error::NumericalFailure { what: "LMI starting point search", iterations: 200 });
    }
    let sol = minimize(prob, &x0, opts)?;
    recover(prob, &sol)
}

fn recover(prob: &LmiProblem, sol: &LmiSolution) -> Result<SynthesisResult> {
    let plant = &prob.plant;
    let (p, y, gamma, gamma_tilde) = prob.layout.unpack(&sol.x);
    let eig = p.symmetric_eigen();
    if !(eig.min() > 0.0) {
        return Err(Error::NumericalFailure { what: "Lyapunov certificate lost definiteness", iterations: sol.newton_steps });
    }
    let condition = eig.max() / eig.min();
    if condition > MAX_P_CONDITION {
        return Err(Error::IllConditioned { what: "Lyapunov certificate P", condition });
    }
    let k = p.solve(&y)?;
    let pk = &p * &k;
    let max_constraint_eig = [
        theta_nominal(plant, &p, &pk, gamma).symmetric_eigen().max(),
        theta_attacked(plant, &p, &pk, gamma_tilde).symmetric_eigen().max(),
        -eig.min(),
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    let gain = ObserverGain::new(k);
    let abscissa = eigenvalues(&plant.error_dynamics(&gain)?)?.spectral_abscissa;
    if !(abscissa < 0.0) {
        return Err(Error::UnstableObserver { abscissa });
    }
    Ok(SynthesisResult {
        gain,
        p,
        gamma,
        gamma_tilde,
        beta: prob.beta,
        objective: sol.objective,
        solver_iterations: sol.newton_steps,
        gap_bound: sol.gap_bound,
        status: sol.status,
        max_constraint_eig,
    })
}

/// Attack-aware design for one weight.
pub fn design_attack_aware(plant: &Plant, beta: f64, opts: &SolverOptions) -> Result<SynthesisResult> {
    solve_lmi(&build_synthesis_lmi(plant, beta)?, opts)
}

/// One design per weight. Individual failures are kept in place so the
/// sweep always returns `betas.len()` entries.
pub fn pareto_sweep(plant: &Plant, betas: &[f64], opts: &SolverOptions) -> Result<Vec<Result<SynthesisResult>>> {
    if betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidInput("Pareto weights must be positive and finite".into()));
    }
    if betas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("Pareto weights must be strictly increasing".into()));
    }
    Ok(betas.iter().map(|&b| design_attack_aware(plant, b, opts)).collect())
}

/// Slack allowed when comparing two scalarised solutions with `β_a < β_b`.
///
/// If both points are within `δ_a`, `δ_b` of their optimal objective, the
/// exchange argument gives `γ̃_b − γ̃_a ≤ (δ_a + δ_b)/(β_b − β_a)` and
/// `γ_a − γ_b ≤ (β_b δ_a + β_a δ_b)/(β_b − β_a)`. Returns the two bounds.
pub fn pareto_tolerances(a: &SynthesisResult, b: &SynthesisResult) -> (f64, f64) {
    let db = b.beta - a.beta;
    let tilde = (a.gap_bound + b.gap_bound) / db;
    let plain = (b.beta * a.gap_bound + a.beta * b.gap_bound) / db;
    (tilde, plain)
}

/// True when `γ` is non-decreasing and `γ̃` non-increasing along a sweep,
/// up to [`pareto_tolerances`].
pub fn is_pareto_monotone(results: &[SynthesisResult]) -> bool {
    results.windows(2).all(|w| {
        let (tol_tilde, tol_plain) = pareto_tolerances(&w[0], &w[1]);
        w[1].gamma_tilde <= w[0].gamma_tilde + tol_tilde && w[0].gamma <= w[1].gamma + tol_plain
    })
}
