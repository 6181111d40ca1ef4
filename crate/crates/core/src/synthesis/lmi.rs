use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::Plant;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// `≺ 0` is enforced as `⪯ −STRICT_MARGIN · I`.
pub const STRICT_MARGIN: f64 = 1e-8;
/// Lower bound on the Lyapunov certificate, `P ⪰ P_MIN_EIG · I`.
pub const P_MIN_EIG: f64 = 1e-6;

/// Symmetric matrix function `F(v) = F₀ + Σₖ vₖ Fₖ` required to satisfy
/// `F(v) ≺ 0`. The strictness margin is already folded into `F₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLmi {
    pub name: &'static str,
    pub f0: Matrix,
    pub coeffs: Vec<Matrix>,
}

impl AffineLmi {
    pub fn dim(&self) -> usize {
        self.f0.nrows()
    }

    pub fn eval(&self, v: &[f64]) -> Matrix {
        let mut out = self.f0.clone();
        for (fk, &vk) in self.coeffs.iter().zip(v) {
            if vk != 0.0 {
                out = &out + &fk.scale(vk);
            }
        }
        out
    }

    /// Probes an affine symmetric map at the origin and the unit vectors.
    pub fn from_affine_map(name: &'static str, n_vars: usize, f: impl Fn(&[f64]) -> Matrix) -> Self {
        let mut v = vec![0.0; n_vars];
        let f0 = f(&v);
        let coeffs = (0..n_vars)
            .map(|k| {
                v[k] = 1.0;
                let fk = &f(&v) - &f0;
                v[k] = 0.0;
                fk
            })
            .collect();
        Self { name, f0, coeffs }
    }
}

/// Position of each decision variable block in the flat vector:
/// the upper triangle of `P` row by row, then `Y` row-major, then `γ`, `γ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_states: usize,
    pub n_outputs: usize,
}

impl VarLayout {
    pub fn n_p(&self) -> usize {
        self.n_states * (self.n_states + 1) / 2
    }

    pub fn n_vars(&self) -> usize {
        self.n_p() + self.n_states * self.n_outputs + 2
    }

    pub fn gamma_index(&self) -> usize {
        self.n_vars() - 2
    }

    pub fn gamma_tilde_index(&self) -> usize {
        self.n_vars() - 1
    }

    pub fn unpack(&self, v: &[f64]) -> (Matrix, Matrix, f64, f64) {
        let n = self.n_states;
        let mut p = Matrix::zeros(n, n);
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                p[(i, j)] = v[idx];
                p[(j, i)] = v[idx];
                idx += 1;
            }
        }
        let ny = self.n_outputs;
        let y = Matrix::from_fn(n, ny, |i, j| v[idx + i * ny + j]);
        (p, y, v[self.gamma_index()], v[self.gamma_tilde_index()])
    }

    pub fn pack(&self, p: &Matrix, y: &Matrix, gamma: f64, gamma_tilde: f64) -> Vec<f64> {
        let n = self.n_states;
        let mut v = Vec::with_capacity(self.n_vars());
        for i in 0..n {
            for j in i..n {
                v.push(0.5 * (p[(i, j)] + p[(j, i)]));
            }
        }
        v.extend_from_slice(y.as_slice());
        v.push(gamma);
        v.push(gamma_tilde);
        v
    }
}

/// Convexified attack-aware observer design problem: minimise `β γ̃ + γ`
/// over `(P, Y = P K, γ, γ̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub plant: Plant,
    pub beta: f64,
    pub layout: VarLayout,
    pub objective: Vec<f64>,
    pub constraints: Vec<AffineLmi>,
}

impl LmiProblem {
    pub fn n_vars(&self) -> usize {
        self.layout.n_vars()
    }

    /// Total size of all constraint blocks, the barrier parameter count.
    pub fn barrier_degree(&self) -> usize {
        self.constraints.iter().map(AffineLmi::dim).sum()
    }

    pub fn objective_at(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Largest eigenvalue over all constraints (margins included).
    pub fn max_eig(&self, v: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.eval(v).symmetric_eigen().max())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bounded-real block matrix for the error channel with gain term `Y`.
/// `pk` stands for `P K`; pass `Y` for the convexified form.
pub fn theta_nominal(plant: &Plant, p: &Matrix, pk: &Matrix, gamma: f64) -> Matrix {
    let (a, c, n1, n2) = (plant.a(), plant.c(), plant.n1(), plant.n2());
    let n = plant.n_states();
    let nd = plant.n_disturbances();
    let pa = p * a;
    let ykc = pk * c;
    let m11 = &(&(&pa + &pa.transpose()) - &ykc) - &ykc.transpose();
    let m12 = &(p * n1) - &(pk * n2);
    let mut th = Matrix::zeros(2 * n + nd, 2 * n + nd);
    th.set_block(0, 0, &m11);
    th.set_block(0, n, &m12);
    th.set_block(n, 0, &m12.transpose());
    th.set_block(n, n, &Matrix::identity(nd).scale(-gamma));
    th.set_block(0, n + nd, &Matrix::identity(n));
    th.set_block(n + nd, 0, &Matrix::identity(n));
    th.set_block(n + nd, n + nd, &Matrix::identity(n).scale(-gamma));
    th
}

/// Bounded-real block matrix for the attacked channel with stacked input
/// `(d, a)` and input matrix `(N₁, −K)`.
pub fn theta_attacked(plant: &Plant, p: &Matrix, pk: &Matrix, gamma_tilde: f64) -> Matrix {
    let a = plant.a();
    let n = plant.n_states();
    let nd = plant.n_disturbances();
    let ny = plant.n_outputs();
    let pa = p * a;
    let pn1 = p * plant.n1();
    let dim = 2 * n + nd + ny;
    let mut th = Matrix::zeros(dim, dim);
    th.set_block(0, 0, &(&pa + &pa.transpose()));
    th.set_block(0, n, &pn1);
    th.set_block(n, 0, &pn1.transpose());
    let neg_y = pk.scale(-1.0);
    th.set_block(0, n + nd, &neg_y);
    th.set_block(n + nd, 0, &neg_y.transpose());
    th.set_block(n, n, &Matrix::identity(nd + ny).scale(-gamma_tilde));
    th.set_block(0, n + nd + ny, &Matrix::identity(n));
    th.set_block(n + nd + ny, 0, &Matrix::identity(n));
    th.set_block(n + nd + ny, n + nd + ny, &Matrix::identity(n).scale(-gamma_tilde));
    th
}

pub fn build_synthesis_lmi(plant: &Plant, beta: f64) -> Result<LmiProblem> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!("weight beta = {beta} must be positive and finite")));
    }
    let layout = VarLayout { n_states: plant.n_states(), n_outputs: plant.n_outputs() };
    let nv = layout.n_vars();
    let margin = |m: Matrix| {
        let k = m.nrows();
        &m + &Matrix::identity(k).scale(STRICT_MARGIN)
    };
    let nominal = AffineLmi::from_affine_map("nominal bounded-real", nv, |v| {
        let (p, y, g, _) = layout.unpack(v);
        margin(theta_nominal(plant, &p, &y, g))
    });
    let attacked = AffineLmi::from_affine_map("attacked bounded-real", nv, |v| {
        let (p, y, _, gt) = layout.unpack(v);
        margin(theta_attacked(plant, &p, &y, gt))
    });
    let n = plant.n_states();
    let positivity = AffineLmi::from_affine_map("Lyapunov positivity", nv, |v| {
        let (p, _, _, _) = layout.unpack(v);
        &Matrix::identity(n).scale(P_MIN_EIG) - &p
    });
    let mut objective = vec![0.0; nv];
    objective[layout.gamma_index()] = 1.0;
    objective[layout.gamma_tilde_index()] = beta;
    Ok(LmiProblem {
        plant: plant.clone(),
        beta,
        layout,
        objective,
        constraints: vec![nominal, attacked, positivity],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plant() -> Plant {
        Plant::new(
            Matrix::from_rows(&[[-0.2, 1.0], [0.0, -1.0]]).unwrap(),
            Matrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            Matrix::identity(2),
            Matrix::hstack(&[&Matrix::identity(2), &Matrix::zeros(2, 2)]).unwrap(),
            Matrix::hstack(&[&Matrix::zeros(2, 2), &Matrix::identity(2)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn layout_round_trip() {
        let layout = VarLayout { n_states: 3, n_outputs: 2 };
        assert_eq!(layout.n_vars(), 6 + 6 + 2);
        let v: Vec<f64> = (0..layout.n_vars()).map(|i| i as f64).collect();
        let (p, y, g, gt) = layout.unpack(&v);
        assert!(p.is_symmetric(0.0));
        assert_eq!(layout.pack(&p, &y, g, gt), v);
    }

    #[test]
    fn block_layout_matches_convexified_terms() {
        let p = plant();
        let prob = build_synthesis_lmi(&p, 2.0).unwrap();
        assert_eq!(prob.constraints[0].dim(), 2 + 4 + 2);
        assert_eq!(prob.constraints[1].dim(), 2 + 4 + 2 + 2);
        assert_eq!(prob.constraints[2].dim(), 2);
        let pm = Matrix::from_rows(&[[2.0, 0.3], [0.3, 1.0]]).unwrap();
        let y = Matrix::from_rows(&[[0.5, -1.0], [0.25, 2.0]]).unwrap();
        let v = prob.layout.pack(&pm, &y, 3.0, 4.0);
        let th1 = prob.constraints[0].eval(&v);
        let pa = &pm * p.a();
        let yc = &y * p.c();
        let m11 = &(&(&pa + &pa.transpose()) - &yc) - &yc.transpose();
        let expect11 = &m11 + &Matrix::identity(2).scale(STRICT_MARGIN);
        assert!((&th1.submatrix(0, 0, 2, 2) - &expect11).max_abs() < 1e-14);
        let m12 = &(&pm * p.n1()) - &(&y * p.n2());
        assert!((&th1.submatrix(0, 2, 2, 4) - &m12).max_abs() < 1e-14);
        let th2 = prob.constraints[1].eval(&v);
        assert!((&th2.submatrix(0, 6, 2, 2) + &y).max_abs() < 1e-14);
        assert!((th2[(9, 9)] - (-4.0 + STRICT_MARGIN)).abs() < 1e-14);
    }

    #[test]
    fn constraints_are_affine() {
        let prob = build_synthesis_lmi(&plant(), 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let v1: Vec<f64> = (0..prob.n_vars()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v2: Vec<f64> = (0..prob.n_vars()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lam: f64 = rng.random_range(0.0..1.0);
            let mix: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
            for c in &prob.constraints {
                let direct = c.eval(&mix);
                let combo = &c.eval(&v1).scale(lam) + &c.eval(&v2).scale(1.0 - lam);
                assert!((&direct - &combo).max_abs() < 1e-12);
                let (pm, y, g, gt) = prob.layout.unpack(&mix);
                let raw = match c.name {
                    "nominal bounded-real" => theta_nominal(&prob.plant, &pm, &y, g),
                    "attacked bounded-real" => theta_attacked(&prob.plant, &pm, &y, gt),
                    _ => &Matrix::identity(2).scale(P_MIN_EIG) - &pm,
                };
                let margin = if c.name == "Lyapunov positivity" { 0.0 } else { STRICT_MARGIN };
                let expect = &raw + &Matrix::identity(raw.nrows()).scale(margin);
                assert!((&direct - &expect).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gain_start_is_feasible() {
        let p = plant();
        let prob = build_synthesis_lmi(&p, 1.0).unwrap();
        // P = I fails here since PA + AᵀP is indefinite; the Lyapunov
        // solution of AᵀP + PA = −I always works for Hurwitz A
        let v = prob.layout.pack(&Matrix::identity(2), &Matrix::zeros(2, 2), 1e3, 1e3);
        assert!(prob.max_eig(&v) > 0.0);
        let pl = crate::linalg::solve_lyapunov(&p.a().transpose(), &Matrix::identity(2)).unwrap();
        let v = prob.layout.pack(&pl, &Matrix::zeros(2, 2), 1e3, 1e3);
        assert!(prob.max_eig(&v) < 0.0);
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(build_synthesis_lmi(&plant(), 0.0).is_err());
        assert!(build_synthesis_lmi(&plant(), f64::NAN).is_err());
    }
}
