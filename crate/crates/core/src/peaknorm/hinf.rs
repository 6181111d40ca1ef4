//! H∞ norm by level-set iteration on the Hamiltonian imaginary-axis test.

use alloc::vec::Vec;

use super::LtiChannel;
use crate::linalg::{eigenvalues, Matrix};
use crate::{Error, Result};

const MAX_LEVEL_ITER: usize = 100;
/// Relative distance to the imaginary axis below which a Hamiltonian
/// eigenvalue is treated as purely imaginary.
const IMAG_AXIS_TOL: f64 = 1e-7;

/// Largest singular value of `G(iω) = C (iωI − A)⁻¹ B + D`.
pub fn sigma_max_at(ch: &LtiChannel, omega: f64) -> Result<f64> {
    let (a, b, c, d) = (ch.a(), ch.b(), ch.c(), ch.d());
    let n = a.nrows();
    let m = b.ncols();
    // (iωI − A)(Xr + iXi) = B in real arithmetic
    let mut sys = Matrix::zeros(2 * n, 2 * n);
    let neg_a = a.scale(-1.0);
    sys.set_block(0, 0, &neg_a);
    sys.set_block(n, n, &neg_a);
    let w = Matrix::identity(n).scale(omega);
    sys.set_block(0, n, &w.scale(-1.0));
    sys.set_block(n, 0, &w);
    let rhs = Matrix::vstack(&[b, &Matrix::zeros(n, m)])?;
    let x = sys.solve(&rhs)?;
    let gr = &(c * &x.submatrix(0, 0, n, m)) + d;
    let gi = c * &x.submatrix(n, 0, n, m);
    let grt = gr.transpose();
    let git = gi.transpose();
    let hr = &(&grt * &gr) + &(&git * &gi);
    let hi = &(&grt * &gi) - &(&git * &gr);
    let mut herm = Matrix::zeros(2 * m, 2 * m);
    herm.set_block(0, 0, &hr);
    herm.set_block(m, m, &hr);
    herm.set_block(0, m, &hi.scale(-1.0));
    herm.set_block(m, 0, &hi);
    Ok(herm.symmetric_eigen().max().max(0.0).sqrt())
}

fn sigma_max(m: &Matrix) -> f64 {
    (&m.transpose() * m).symmetric_eigen().max().max(0.0).sqrt()
}

/// Hamiltonian whose imaginary eigenvalues are the frequencies where a
/// singular value of `G(iω)` equals `gamma`.
fn hamiltonian(ch: &LtiChannel, gamma: f64) -> Result<Matrix> {
    let (a, b, c, d) = (ch.a(), ch.b(), ch.c(), ch.d());
    let n = a.nrows();
    let dt = d.transpose();
    let r = &(&dt * d) - &Matrix::identity(d.ncols()).scale(gamma * gamma);
    let s = &(d * &dt) - &Matrix::identity(d.nrows()).scale(gamma * gamma);
    let r_inv = r.inverse()?;
    let s_inv = s.inverse()?;
    let bri = b * &r_inv;
    let h11 = a - &(&(&bri * &dt) * c);
    let h12 = (&bri * &b.transpose()).scale(-gamma);
    let h21 = (&(&c.transpose() * &s_inv) * c).scale(gamma);
    let h22 = &(&(&c.transpose() * d) * &bri.transpose()) - &a.transpose();
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.set_block(0, 0, &h11);
    h.set_block(0, n, &h12);
    h.set_block(n, 0, &h21);
    h.set_block(n, n, &h22);
    Ok(h)
}

/// H∞ norm of a stable channel to relative accuracy `tol`.
///
/// Starting from a lower bound evaluated at candidate frequencies, the
/// level `γ = (1 + 2 tol)·lower` is tested for imaginary Hamiltonian
/// eigenvalues. Each crossing frequency set yields midpoints where the
/// frequency response is evaluated again, raising the lower bound, until
/// the level is crossing-free. The returned value is a realised
/// `σmax(G(iω))`, so it never exceeds the true norm.
pub fn hinf_norm(ch: &LtiChannel, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("H-infinity tolerance must be positive".into()));
    }
    let spec = eigenvalues(ch.a())?;
    if spec.spectral_abscissa >= 0.0 {
        return Err(Error::Infeasible(alloc::format!(
            "H-infinity norm infinite: spectral abscissa {}",
            spec.spectral_abscissa
        )));
    }
    let mut lower = sigma_max(ch.d()).max(sigma_max_at(ch, 0.0)?);
    for lambda in &spec.eigenvalues {
        for omega in [lambda.im.abs(), lambda.norm()] {
            lower = lower.max(sigma_max_at(ch, omega)?);
        }
    }
    if lower == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..MAX_LEVEL_ITER {
        let gamma = (1.0 + 2.0 * tol) * lower;
        let h = hamiltonian(ch, gamma)?;
        let scale = h.max_abs().max(1.0);
        let mut crossings: Vec<f64> = eigenvalues(&h)?
            .eigenvalues
            .iter()
            .filter(|l| l.im >= 0.0 && l.re.abs() <= IMAG_AXIS_TOL * scale)
            .map(|l| l.im)
            .collect();
        if crossings.is_empty() {
            return Ok(lower);
        }
        crossings.sort_by(f64::total_cmp);
        crossings.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
        let mut candidates: Vec<f64> = crossings.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        candidates.extend_from_slice(&crossings);
        let mut improved = lower;
        for omega in candidates {
            improved = improved.max(sigma_max_at(ch, omega)?);
        }
        if improved <= lower * (1.0 + 0.5 * tol) {
            // spurious crossing: the level set test cannot be sharpened further
            return Ok(improved);
        }
        lower = improved;
    }
    Err(Error::NumericalFailure {
        what: "H-infinity level-set iteration",
        iterations: MAX_LEVEL_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_lag() {
        let ch = LtiChannel::strictly_proper(
            Matrix::from_diag(&[-1.0]),
            Matrix::from_diag(&[1.0]),
            Matrix::from_diag(&[1.0]),
        )
        .unwrap();
        assert!((hinf_norm(&ch, 1e-10).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decoupled_channels_take_the_max() {
        let ch = LtiChannel::strictly_proper(
            Matrix::from_diag(&[-1.0, -0.5]),
            Matrix::from_diag(&[2.0, 1.0]),
            Matrix::identity(2),
        )
        .unwrap();
        // gains 2/1 and 1/0.5
        assert!((hinf_norm(&ch, 1e-10).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn resonant_peak() {
        // ω_n = 1, ζ = 0.05: peak 1/(2ζ√(1−ζ²))
        let zeta: f64 = 0.05;
        let ch = LtiChannel::strictly_proper(
            Matrix::from_rows(&[[0.0, 1.0], [-1.0, -2.0 * zeta]]).unwrap(),
            Matrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            Matrix::from_rows(&[[1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let expect = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        let got = hinf_norm(&ch, 1e-10).unwrap();
        assert!(((got - expect) / expect).abs() < 1e-8, "{got} vs {expect}");
    }

    #[test]
    fn feedthrough_dominates_high_frequency() {
        let ch = LtiChannel::new(
            Matrix::from_diag(&[-1.0]),
            Matrix::from_diag(&[1.0]),
            Matrix::from_diag(&[-1.0]),
            Matrix::from_diag(&[1.0]),
        )
        .unwrap();
        // G(s) = 1 − 1/(s+1) = s/(s+1): sup is 1 as ω → ∞
        let got = hinf_norm(&ch, 1e-10).unwrap();
        assert!((got - 1.0).abs() < 1e-8);
    }
}
