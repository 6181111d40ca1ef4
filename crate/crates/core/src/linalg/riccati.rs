use alloc::format;

use super::{
    eigenvalues, Matrix, CARE_RESIDUAL_TOL, LYAPUNOV_RESIDUAL_TOL, NEWTON_KLEINMAN_MAX_ITER,
};
use crate::{Error, Result};

/// Solves `A P + P Aᵀ + Q = 0` for Hurwitz `A` and symmetric `Q`.
///
/// The equation is assembled as an `n² × n²` linear system, which is fine
/// for the state dimensions this crate deals with.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    check_square("Lyapunov state matrix", a)?;
    if q.shape() != a.shape() {
        return Err(Error::Dimension(format!(
            "Lyapunov Q is {}x{}, A is {}x{}",
            q.nrows(),
            q.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    if !q.is_symmetric(1e-12 * q.max_abs().max(1.0)) {
        return Err(Error::InvalidInput("Lyapunov Q must be symmetric".into()));
    }
    let abscissa = eigenvalues(a)?.spectral_abscissa;
    if abscissa >= 0.0 {
        return Err(Error::Infeasible(format!(
            "Lyapunov equation needs a Hurwitz matrix (spectral abscissa {abscissa})"
        )));
    }
    let p = lyapunov_unchecked(a, q)?;
    let residual = (&(&(a * &p) + &(&p * &a.transpose())) + q).max_abs();
    let scale = q.max_abs().max(a.max_abs() * p.max_abs()).max(f64::MIN_POSITIVE);
    if residual > LYAPUNOV_RESIDUAL_TOL * scale {
        return Err(Error::NumericalFailure {
            what: "Lyapunov solve (residual check)",
            iterations: 1,
        });
    }
    Ok(p)
}

/// Kronecker-form solve without stability checks.
pub(crate) fn lyapunov_unchecked(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let nn = n * n;
    let mut sys = Matrix::zeros(nn, nn);
    // row (i, j) of A P + P Aᵀ
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                sys[(row, k * n + j)] += a[(i, k)];
                sys[(row, i * n + k)] += a[(j, k)];
            }
        }
    }
    let rhs = Matrix::new(nn, 1, q.as_slice().iter().map(|v| -v).collect())?;
    let x = sys.solve(&rhs)?;
    let p = Matrix::new(n, n, x.as_slice().to_vec())?;
    Ok(p.symmetrize())
}

/// Stabilising solution of the filter Riccati equation
/// `A P + P Aᵀ − P Cᵀ R⁻¹ C P + Q = 0`.
///
/// Newton–Kleinman iteration. The initial gain is zero for Hurwitz `A`;
/// otherwise the Bass-type gain `K₀ = Z⁻¹ Cᵀ`, with `Z` solving a Lyapunov
/// equation for the shifted dual dynamics, places every eigenvalue of
/// `A − K₀ C` in the open left half-plane. This seed needs `(A, C)`
/// observable.
pub fn solve_care(a: &Matrix, c: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    check_square("CARE state matrix", a)?;
    let n = a.nrows();
    if c.ncols() != n {
        return Err(Error::Dimension(format!(
            "CARE output matrix has {} columns, state dimension is {n}",
            c.ncols()
        )));
    }
    let ny = c.nrows();
    if q.shape() != (n, n) || r.shape() != (ny, ny) {
        return Err(Error::Dimension("CARE weight matrices have wrong shape".into()));
    }
    if !q.is_symmetric(1e-12 * q.max_abs().max(1.0)) || !r.is_symmetric(1e-12 * r.max_abs().max(1.0)) {
        return Err(Error::InvalidInput("CARE weights must be symmetric".into()));
    }
    if q.symmetric_eigen().min() < -1e-12 * q.max_abs().max(1.0) {
        return Err(Error::InvalidInput("CARE process weight Q must be positive semidefinite".into()));
    }
    let r_chol = r
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("CARE measurement weight R must be positive definite".into()))?;
    let r_inv = r_chol.inverse();
    let ct = c.transpose();
    let g = &(&ct * &r_inv) * c; // Cᵀ R⁻¹ C

    let mut k = initial_gain(a, c)?;
    let mut p = Matrix::zeros(n, n);
    let mut converged = false;
    for _ in 0..NEWTON_KLEINMAN_MAX_ITER {
        let acl = a - &(&k * c);
        let abscissa = eigenvalues(&acl)?.spectral_abscissa;
        if abscissa >= 0.0 {
            return Err(Error::Infeasible(format!(
                "no stabilising Riccati solution: Newton iterate lost stability (abscissa {abscissa})"
            )));
        }
        let rhs = &(&(&k * r) * &k.transpose()) + q;
        let next = lyapunov_unchecked(&acl, &rhs)?;
        let step = (&next - &p).max_abs();
        p = next;
        k = &(&p * &ct) * &r_inv;
        if step <= 1e-14 * (1.0 + p.max_abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure {
            what: "Newton–Kleinman Riccati iteration",
            iterations: NEWTON_KLEINMAN_MAX_ITER,
        });
    }
    let residual = (&(&(&(a * &p) + &(&p * &a.transpose())) - &(&(&p * &g) * &p)) + q).max_abs();
    let scale = 1.0 + p.max_abs() * p.max_abs();
    if residual > CARE_RESIDUAL_TOL * scale {
        return Err(Error::NumericalFailure {
            what: "Newton–Kleinman Riccati iteration (residual check)",
            iterations: NEWTON_KLEINMAN_MAX_ITER,
        });
    }
    let closed = a - &(&p * &g);
    if eigenvalues(&closed)?.spectral_abscissa >= 0.0 {
        return Err(Error::Infeasible("Riccati solution is not stabilising".into()));
    }
    Ok(p)
}

fn initial_gain(a: &Matrix, c: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let spec = eigenvalues(a)?;
    if spec.spectral_abscissa < 0.0 {
        return Ok(Matrix::zeros(n, c.nrows()));
    }
    // Shift so that -(Aᵀ + βI) is Hurwitz, then stabilise the dual pair.
    let beta = 1.0 + a.norm_inf();
    let shifted = &a.transpose() + &Matrix::identity(n).scale(beta);
    let neg = -&shifted;
    let w = (c.transpose() * c).scale(2.0);
    // (−(Aᵀ+βI)) Z + Z (−(Aᵀ+βI))ᵀ + 2 CᵀC = 0
    let z = lyapunov_unchecked(&neg, &w)?;
    let zinv = z
        .cholesky()
        .ok_or_else(|| Error::Infeasible("(A, C) is not observable; cannot seed the Riccati iteration".into()))?
        .inverse();
    // F = C Z⁻¹ stabilises Aᵀ − Cᵀ F, hence K = Fᵀ stabilises A − K C.
    let f = c * &zinv;
    Ok(f.transpose())
}

fn check_square(what: &str, m: &Matrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )))
    }
}
