use alloc::format;

use crate::analysis::{ObserverGain, Plant};
use crate::linalg::{solve_care, Matrix};
use crate::{Error, Result};

/// Steady-state Kalman gain `K = P Cᵀ R⁻¹`, with `P` the stabilising
/// solution of the filter Riccati equation for state noise covariance
/// `process_cov` (`n_x × n_x`) and measurement noise covariance `meas_cov`.
pub fn design_kalman(p: &Plant, process_cov: &Matrix, meas_cov: &Matrix) -> Result<ObserverGain> {
    let ny = p.n_outputs();
    if meas_cov.shape() != (ny, ny) {
        return Err(Error::Dimension(format!(
            "measurement covariance is {}x{}, expected {ny}x{ny}",
            meas_cov.nrows(),
            meas_cov.ncols()
        )));
    }
    let cov = solve_care(p.a(), p.c(), process_cov, meas_cov)?;
    let r_inv = meas_cov.inverse()?;
    Ok(ObserverGain::new(&(&cov * &p.c().transpose()) * &r_inv))
}

/// Covariances induced by a disturbance with independent entries uniform on
/// `[−ε_d, ε_d]` (variance `ε_d²/3`): `(N₁ Σ N₁ᵀ, N₂ Σ N₂ᵀ)`.
pub fn uniform_noise_covariances(p: &Plant, epsilon_d: f64) -> Result<(Matrix, Matrix)> {
    if !(epsilon_d > 0.0) || !epsilon_d.is_finite() {
        return Err(Error::InvalidInput(format!("disturbance bound {epsilon_d} must be positive")));
    }
    let var = epsilon_d * epsilon_d / 3.0;
    let q = (p.n1() * &p.n1().transpose()).scale(var);
    let r = (p.n2() * &p.n2().transpose()).scale(var);
    Ok((q.symmetrize(), r.symmetrize()))
}

/// Kalman baseline for a uniformly bounded disturbance.
pub fn design_kalman_uniform(p: &Plant, epsilon_d: f64) -> Result<ObserverGain> {
    let (q, r) = uniform_noise_covariances(p, epsilon_d)?;
    design_kalman(p, &q, &r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant(a: Matrix) -> Plant {
        Plant::new(
            a,
            Matrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            Matrix::identity(2),
            Matrix::hstack(&[&Matrix::identity(2), &Matrix::zeros(2, 2)]).unwrap(),
            Matrix::hstack(&[&Matrix::zeros(2, 2), &Matrix::identity(2)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_covariances_for_half_bound() {
        let p = plant(Matrix::from_rows(&[[-0.2, 1.0], [0.0, -1.0]]).unwrap());
        let (q, r) = uniform_noise_covariances(&p, 0.5).unwrap();
        assert!((&q - &Matrix::identity(2).scale(1.0 / 12.0)).max_abs() < 1e-16);
        assert!((&r - &Matrix::identity(2).scale(1.0 / 12.0)).max_abs() < 1e-16);
    }

    #[test]
    fn zero_process_noise_gives_zero_gain() {
        let p = plant(Matrix::from_rows(&[[-0.2, 1.0], [0.0, -1.0]]).unwrap());
        let k = design_kalman(&p, &Matrix::zeros(2, 2), &Matrix::identity(2)).unwrap();
        assert!(k.k().max_abs() < 1e-14);
    }

    #[test]
    fn cheaper_measurements_raise_the_gain() {
        let p = plant(Matrix::from_rows(&[[-0.2, 1.0], [0.0, -1.0]]).unwrap());
        let q = Matrix::identity(2);
        let precise = design_kalman(&p, &q, &Matrix::identity(2).scale(1e-4)).unwrap();
        let noisy = design_kalman(&p, &q, &Matrix::identity(2)).unwrap();
        assert!(precise.k().norm_fro() > 10.0 * noisy.k().norm_fro());
    }

    #[test]
    fn gain_satisfies_riccati_and_stabilises() {
        let p = plant(Matrix::from_rows(&[[0.3, 1.0], [-0.5, 0.1]]).unwrap());
        let (q, r) = uniform_noise_covariances(&p, 0.5).unwrap();
        let k = design_kalman(&p, &q, &r).unwrap();
        let acl = p.error_dynamics(&k).unwrap();
        assert!(crate::linalg::is_hurwitz(&acl, 0.0).unwrap());
    }
}
