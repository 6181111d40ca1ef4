//! Primal log-det barrier method for small LMI problems
//! `min cᵀv  s.t.  Fᵢ(v) ≺ 0`.

use alloc::vec::Vec;

use super::lmi::LmiProblem;
use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverOptions {
    /// Relative optimality gap `m / t ≤ gap · |objective|`.
    pub gap: f64,
    /// Barrier parameter growth per outer iteration.
    pub mu: f64,
    /// Cap on Newton steps over all outer iterations.
    pub max_newton: usize,
    /// Centering stops when half the squared Newton decrement drops below this.
    pub centering_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap: 1e-6, mu: 10.0, max_newton: 2000, centering_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SolverStatus {
    Optimal,
    /// Newton budget exhausted; the point is strictly feasible but the
    /// gap target was not reached.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    /// `m / t` at the final barrier parameter, which bounds the
    /// suboptimality of an exactly centred point.
    pub gap_bound: f64,
    pub status: SolverStatus,
}

struct Slack {
    inverses: Vec<Matrix>,
    log_det: f64,
}

/// Cholesky of every `−Fᵢ(v)`; `None` when some constraint is not strictly met.
fn slack(prob: &LmiProblem, v: &[f64], want_inverse: bool) -> Option<Slack> {
    let mut inverses = Vec::new();
    let mut log_det = 0.0;
    for c in &prob.constraints {
        let s = c.eval(v).scale(-1.0);
        let ch = s.cholesky()?;
        log_det += ch.log_det();
        if want_inverse {
            inverses.push(ch.inverse());
        }
    }
    Some(Slack { inverses, log_det })
}

fn barrier_value(prob: &LmiProblem, t: f64, v: &[f64]) -> Option<f64> {
    slack(prob, v, false).map(|s| t * prob.objective_at(v) - s.log_det)
}

/// Gradient and Hessian of `t cᵀv − Σ log det(−Fᵢ(v))`.
fn derivatives(prob: &LmiProblem, t: f64, s: &Slack) -> (Vec<f64>, Matrix) {
    let nv = prob.n_vars();
    let mut grad: Vec<f64> = prob.objective.iter().map(|c| t * c).collect();
    let mut hess = Matrix::zeros(nv, nv);
    for (c, sinv) in prob.constraints.iter().zip(&s.inverses) {
        let dim = c.dim();
        // Gₖ = S⁻¹ Fₖ; grad += tr Gₖ; H += tr(Gₖ Gₗ)
        let g: Vec<Matrix> = c.coeffs.iter().map(|fk| sinv * fk).collect();
        for k in 0..nv {
            grad[k] += g[k].trace();
            for l in 0..=k {
                let (gk, gl) = (g[k].as_slice(), g[l].as_slice());
                let mut acc = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        acc += gk[i * dim + j] * gl[j * dim + i];
                    }
                }
                hess[(k, l)] += acc;
            }
        }
    }
    for k in 0..nv {
        for l in 0..k {
            hess[(l, k)] = hess[(k, l)];
        }
    }
    (grad, hess)
}

fn newton_direction(grad: &[f64], hess: &Matrix) -> Option<Vec<f64>> {
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    if let Some(ch) = hess.cholesky() {
        return Some(ch.solve_vec(&neg));
    }
    // regularise a numerically semidefinite Hessian
    let scale = hess.max_abs().max(f64::MIN_POSITIVE);
    let mut ridge = 1e-12 * scale;
    for _ in 0..8 {
        let reg = hess + &Matrix::identity(hess.nrows()).scale(ridge);
        if let Some(ch) = reg.cholesky() {
            return Some(ch.solve_vec(&neg));
        }
        ridge *= 100.0;
    }
    None
}

/// Runs the barrier method from a strictly feasible `x0`.
pub fn minimize(prob: &LmiProblem, x0: &[f64], opts: &SolverOptions) -> Result<LmiSolution> {
    if !(opts.gap > 0.0) || !(opts.mu > 1.0) || !(opts.centering_tol > 0.0) {
        return Err(Error::InvalidInput("solver options: need gap > 0, mu > 1, centering_tol > 0".into()));
    }
    if x0.len() != prob.n_vars() {
        return Err(Error::Dimension("starting point has the wrong length".into()));
    }
    if slack(prob, x0, false).is_none() {
        return Err(Error::InvalidInput("starting point is not strictly feasible".into()));
    }
    let m = prob.barrier_degree() as f64;
    let mut x = x0.to_vec();
    let mut t = m / prob.objective_at(&x).abs().max(1e-6);
    let mut steps = 0usize;
    loop {
        // centering
        loop {
            if steps >= opts.max_newton {
                return Ok(finish(prob, x, steps, m / t, SolverStatus::IterationLimit));
            }
            let s = slack(prob, &x, true).ok_or(Error::NumericalFailure {
                what: "barrier iterate left the feasible set",
                iterations: steps,
            })?;
            let (grad, hess) = derivatives(prob, t, &s);
            let Some(dir) = newton_direction(&grad, &hess) else {
                break;
            };
            let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let decrement = -slope;
            if !(decrement > 0.0) || 0.5 * decrement <= opts.centering_tol {
                break;
            }
            steps += 1;
            let f0 = t * prob.objective_at(&x) - s.log_det;
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
                if let Some(f) = barrier_value(prob, t, &trial) {
                    if f <= f0 + 0.25 * alpha * slope {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let obj = prob.objective_at(&x);
        if m / t <= opts.gap * obj.abs().max(1e-12) {
            return Ok(finish(prob, x, steps, m / t, SolverStatus::Optimal));
        }
        t *= opts.mu;
    }
}

fn finish(prob: &LmiProblem, x: Vec<f64>, steps: usize, gap_bound: f64, status: SolverStatus) -> LmiSolution {
    LmiSolution { objective: prob.objective_at(&x), x, newton_steps: steps, gap_bound, status }
}

/// Doubles the scalar variables at `indices` until `x` is strictly feasible.
pub fn raise_until_feasible(prob: &LmiProblem, x: &mut [f64], indices: &[usize]) -> bool {
    for _ in 0..200 {
        if slack(prob, x, false).is_some() {
            return true;
        }
        for &i in indices {
            x[i] *= 2.0;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::super::lmi::{AffineLmi, VarLayout};
    use super::*;
    use crate::analysis::Plant;
    use alloc::vec;

    fn dummy_plant() -> Plant {
        Plant::new(
            Matrix::from_diag(&[-1.0]),
            Matrix::from_diag(&[1.0]),
            Matrix::from_diag(&[1.0]),
            Matrix::from_diag(&[1.0]),
            Matrix::from_diag(&[0.0]),
        )
        .unwrap()
    }

    /// Wraps raw constraints in an `LmiProblem` for solver-only tests.
    fn raw_problem(objective: Vec<f64>, constraints: Vec<AffineLmi>) -> LmiProblem {
        let nv = objective.len();
        // layout only matters for `n_vars`; pick one with matching size
        let layout = match nv {
            2 => VarLayout { n_states: 0, n_outputs: 0 },
            _ => panic!("unsupported test size"),
        };
        LmiProblem { plant: dummy_plant(), beta: 1.0, layout, objective, constraints }
    }

    #[test]
    fn linear_program_in_lmi_form() {
        // min x + y  s.t.  x ≥ 1, y ≥ 2, as 1×1 blocks −x + 1 ≺ 0 etc.
        let c1 = AffineLmi::from_affine_map("x", 2, |v| Matrix::from_diag(&[1.0 - v[0]]));
        let c2 = AffineLmi::from_affine_map("y", 2, |v| Matrix::from_diag(&[2.0 - v[1]]));
        let prob = raw_problem(vec![1.0, 1.0], vec![c1, c2]);
        let sol = minimize(&prob, &[5.0, 5.0], &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective - 3.0).abs() <= 3.0 * 1e-6 + 1e-9, "{sol:?}");
        assert!(sol.objective >= 3.0);
    }

    #[test]
    fn semidefinite_minimum_eigenvalue() {
        // max λ s.t. λI ⪯ M  ⇔  min −λ s.t. λI − M ≺ 0; answer λmin(M).
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let c = AffineLmi::from_affine_map("eig", 2, |v| &Matrix::identity(2).scale(v[0]) - &m);
        let box_ = AffineLmi::from_affine_map("box", 2, |v| Matrix::from_diag(&[v[1] - 1.0, -v[1] - 1.0]));
        let prob = raw_problem(vec![-1.0, 0.0], vec![c, box_]);
        let sol = minimize(&prob, &[0.0, 0.0], &SolverOptions::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-5, "{sol:?}");
    }

    #[test]
    fn iteration_cap_returns_feasible_point() {
        let c1 = AffineLmi::from_affine_map("x", 2, |v| Matrix::from_diag(&[1.0 - v[0]]));
        let c2 = AffineLmi::from_affine_map("y", 2, |v| Matrix::from_diag(&[2.0 - v[1]]));
        let prob = raw_problem(vec![1.0, 1.0], vec![c1, c2]);
        let opts = SolverOptions { max_newton: 2, ..SolverOptions::default() };
        let sol = minimize(&prob, &[5.0, 5.0], &opts).unwrap();
        assert_eq!(sol.status, SolverStatus::IterationLimit);
        assert!(sol.x[0] > 1.0 && sol.x[1] > 2.0);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let c1 = AffineLmi::from_affine_map("x", 2, |v| Matrix::from_diag(&[1.0 - v[0]]));
        let prob = raw_problem(vec![1.0, 0.0], vec![c1]);
        assert!(minimize(&prob, &[0.0, 0.0], &SolverOptions::default()).is_err());
    }
}
