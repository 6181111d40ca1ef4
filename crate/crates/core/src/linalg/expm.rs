//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3, 5, 7, 9, 13).

use alloc::format;

use super::Matrix;
use crate::{Error, Result};

#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `e^{M t}` for square `M` and `t ≥ 0`.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "expm of non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("expm time {t} must be finite and non-negative")));
    }
    let a = m.scale(t);
    let n = a.nrows();
    let id = Matrix::identity(n);
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(id);
    }

    for &(degree, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(&a, coeffs);
        }
    }

    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale(0.5f64.powi(s));
    let mut r = pade_13(&scaled)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(r)
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.nrows();
    let id = Matrix::identity(n);
    let a2 = a * a;
    let mut even = id.scale(b[0]);
    let mut odd = id.scale(b[1]);
    let mut power = id;
    let mut k = 2;
    while k < b.len() {
        power = &power * &a2;
        even = &even + &power.scale(b[k]);
        if k + 1 < b.len() {
            odd = &odd + &power.scale(b[k + 1]);
        }
        k += 2;
    }
    let u = a * &odd;
    finish(&u, &even)
}

fn pade_13(a: &Matrix) -> Result<Matrix> {
    let b = &PADE_13;
    let n = a.nrows();
    let id = Matrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &(&a6.scale(b[13]) + &a4.scale(b[11])) + &a2.scale(b[9]);
    let u_poly = &(&(&(&a6 * &inner_u) + &a6.scale(b[7])) + &a4.scale(b[5]))
        + &(&a2.scale(b[3]) + &id.scale(b[1]));
    let u = a * &u_poly;
    let inner_v = &(&a6.scale(b[12]) + &a4.scale(b[10])) + &a2.scale(b[8]);
    let v = &(&(&(&a6 * &inner_v) + &a6.scale(b[6])) + &a4.scale(b[4]))
        + &(&a2.scale(b[2]) + &id.scale(b[0]));
    finish(&u, &v)
}

fn finish(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    let num = v + u;
    let den = v - u;
    den.solve(&num)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_gives_identity() {
        let e = expm(&Matrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(e, Matrix::identity(2));
    }

    #[test]
    fn diagonal_case() {
        let e = expm(&Matrix::from_diag(&[-1.0, -2.0]), 1.0).unwrap();
        assert!((e[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn nilpotent_closed_form() {
        let n = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        for &t in &[0.0, 0.3, 2.5, 40.0] {
            let e = expm(&n, t).unwrap();
            let expect = Matrix::from_rows(&[[1.0, t], [0.0, 1.0]]).unwrap();
            assert!((&e - &expect).max_abs() <= 1e-12 * t.max(1.0), "t={t}: {e:?}");
        }
    }

    #[test]
    fn relative_accuracy_on_large_norm_diagonal() {
        // ‖Mt‖ = 100 boundary of the accuracy contract.
        let m = Matrix::from_diag(&[-100.0, -3.0, 0.5]);
        let e = expm(&m, 1.0).unwrap();
        for (i, &l) in [-100.0f64, -3.0, 0.5].iter().enumerate() {
            let exact = l.exp();
            assert!(((e[(i, i)] - exact) / exact).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_generator() {
        let w = Matrix::from_rows(&[[0.0, 2.0], [-2.0, 0.0]]).unwrap();
        let t = 1.3;
        let e = expm(&w, t).unwrap();
        let (s, c) = (2.0 * t).sin_cos();
        let expect = Matrix::from_rows(&[[c, s], [-s, c]]).unwrap();
        assert!((&e - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(expm(&Matrix::zeros(2, 3), 1.0).is_err());
        assert!(expm(&Matrix::identity(2), -1.0).is_err());
    }
}
