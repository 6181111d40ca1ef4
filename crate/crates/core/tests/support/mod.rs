//! Random generators and numerical checks shared by the property suites and
//! the acceptance gate. Every check returns `Err` with a description instead
//! of panicking so callers can count passes.
#![allow(dead_code)]

use num_complex::Complex64;
use peakguard_core::analysis::{analyze, DisturbanceSpec, ObserverGain, Plant};
use peakguard_core::linalg::{eigenvalues, expm, is_hurwitz, solve_care, solve_lyapunov};
use peakguard_core::peaknorm::{hinf_norm, peak_to_peak_norm, LtiChannel, NormKind, NormResult};
use peakguard_core::Matrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Check = Result<(), String>;

pub const NORM_TOL: f64 = 1e-4;

pub fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Standard normal matrix shifted so its spectral abscissa is `-margin`.
pub fn stable_matrix<R: Rng>(rng: &mut R, n: usize, margin: f64) -> Matrix {
    let m = gaussian(rng, n, n);
    let alpha = eigenvalues(&m).unwrap().spectral_abscissa;
    &m - &Matrix::identity(n).scale(alpha + margin)
}

pub fn random_channel<R: Rng>(rng: &mut R, nx: usize, nu: usize, ny: usize, feedthrough: bool) -> LtiChannel {
    let margin = rng.random_range(0.3..1.5);
    let a = stable_matrix(rng, nx, margin);
    let b = gaussian(rng, nx, nu);
    let c = gaussian(rng, ny, nx);
    let d = if feedthrough { gaussian(rng, ny, nu).scale(0.5) } else { Matrix::zeros(ny, nu) };
    LtiChannel::new(a, b, c, d).unwrap()
}

fn dims<R: Rng>(rng: &mut R) -> (usize, usize, usize) {
    (rng.random_range(1..=3), rng.random_range(1..=2), rng.random_range(1..=2))
}

/// Two channels with equal input and output sizes.
pub fn random_parallel_pair<R: Rng>(rng: &mut R) -> (LtiChannel, LtiChannel) {
    let (nx, nu, ny) = dims(rng);
    let nx2 = rng.random_range(1..=3);
    let fd = rng.random_bool(0.5);
    let gd = rng.random_bool(0.5);
    (random_channel(rng, nx, nu, ny, fd), random_channel(rng, nx2, nu, ny, gd))
}

/// `(f, h)` with the output of `h` feeding `f`.
pub fn random_series_pair<R: Rng>(rng: &mut R) -> (LtiChannel, LtiChannel) {
    let (nx, nu, ny) = dims(rng);
    let (nx2, nmid) = (rng.random_range(1..=3), rng.random_range(1..=2));
    let fd = rng.random_bool(0.5);
    let hd = rng.random_bool(0.5);
    (random_channel(rng, nx, nmid, ny, fd), random_channel(rng, nx2, nu, nmid, hd))
}

fn norm(ch: &LtiChannel) -> Result<NormResult, String> {
    peak_to_peak_norm(ch, NormKind::Infinity, NORM_TOL).map_err(|e| e.to_string())
}

pub fn check_triangle(f: &LtiChannel, g: &LtiChannel) -> Check {
    let (nf, ng) = (norm(f)?, norm(g)?);
    let sum = norm(&f.parallel(g).map_err(|e| e.to_string())?)?;
    if sum.value <= nf.value + ng.value + 2.0 * NORM_TOL {
        Ok(())
    } else {
        Err(format!("‖f+g‖ = {} > ‖f‖ + ‖g‖ = {} + {}", sum.value, nf.value, ng.value))
    }
}

pub fn check_submultiplicative(f: &LtiChannel, h: &LtiChannel) -> Check {
    let (nf, nh) = (norm(f)?, norm(h)?);
    let fh = norm(&f.series(h).map_err(|e| e.to_string())?)?;
    if fh.value <= nf.upper() * nh.upper() + NORM_TOL {
        Ok(())
    } else {
        Err(format!("‖f∘h‖ = {} > ‖f‖‖h‖ = {} · {}", fh.value, nf.value, nh.value))
    }
}

pub fn check_scaling(g: &LtiChannel, alpha: f64) -> Check {
    let (n, ns) = (norm(g)?, norm(&g.scaled(alpha))?);
    let allowance = NORM_TOL * (1.0 + alpha.abs());
    if (ns.value - alpha.abs() * n.value).abs() <= allowance {
        Ok(())
    } else {
        Err(format!("‖αg‖ = {} but |α|‖g‖ = {}", ns.value, alpha.abs() * n.value))
    }
}

/// Drives `g` with piecewise-constant inputs bounded by `bound` and checks the
/// sampled output against `‖g‖ · bound`. The discretisation is exact, so the
/// only slack is the norm's own certificate.
///
/// Two inputs are used: uniform noise, and the sign pattern of the
/// time-reversed kernel row that attains the norm, which should come close
/// to the bound at the final time.
pub fn check_amplification<R: Rng>(g: &LtiChannel, bound: f64, rng: &mut R) -> Check {
    let nr = norm(g)?;
    let (n, nu) = (g.n_states(), g.n_inputs());
    let speed = g.a().norm_inf().max(1.0);
    let h = (0.02 / speed).min(0.01);
    let steps = (nr.horizon.min(80.0) / h).ceil() as usize;
    let horizon = steps as f64 * h;

    // exact ZOH step from the augmented exponential
    let mut aug = Matrix::zeros(n + nu, n + nu);
    aug.set_block(0, 0, g.a());
    aug.set_block(0, n, g.b());
    let e = expm(&aug, h).map_err(|e| e.to_string())?;
    let phi = e.submatrix(0, 0, n, n);
    let gamma = e.submatrix(0, n, n, nu);

    // kernel averaged over each interval, sampled at the midpoint
    let row = nr.argmax_row();
    let mid = expm(g.a(), 0.5 * h).map_err(|e| e.to_string())?;
    let step = expm(g.a(), h).map_err(|e| e.to_string())?;
    let mut psi = &mid * g.b();
    let mut kernel_signs = Vec::with_capacity(steps);
    for _ in 0..steps {
        let k = &g.c().submatrix(row, 0, 1, n) * &psi;
        kernel_signs.push((0..nu).map(|j| if k[(0, j)] >= 0.0 { bound } else { -bound }).collect::<Vec<_>>());
        psi = &step * &psi;
    }

    let limit = nr.upper() * bound * (1.0 + 1e-9) + 1e-12;
    let mut aligned_final = 0.0;
    for aligned in [false, true] {
        let mut x = vec![0.0; n];
        let mut peak: f64 = 0.0;
        for k in 0..steps {
            let u: Vec<f64> = if aligned {
                kernel_signs[steps - 1 - k].clone()
            } else {
                (0..nu).map(|_| rng.random_range(-bound..=bound)).collect()
            };
            let y = output(g, &x, &u);
            peak = peak.max(y.iter().fold(0.0, |m, v| m.max(v.abs())));
            let mut next = phi.mul_vec(&x);
            gamma.mul_vec_add(&u, &mut next);
            x = next;
        }
        let y_end = g.c().mul_vec(&x);
        peak = peak.max(y_end.iter().fold(0.0, |m, v| m.max(v.abs())));
        if aligned {
            aligned_final = y_end[row].abs();
        }
        if peak > limit {
            return Err(format!("output peak {peak} exceeds ‖g‖·bound = {limit} (aligned input: {aligned})"));
        }
    }
    // The aligned input recovers the kernel integral over the horizon, so it
    // must come close to the truncated norm minus the feedthrough term.
    let dirac: f64 = g.d().row(row).iter().map(|v| v.abs()).sum();
    let integral = (nr.row_gains[row] - dirac) * bound;
    if horizon >= nr.horizon && aligned_final < 0.99 * integral - 1e-9 {
        return Err(format!("aligned input reached only {aligned_final} of the kernel integral {integral}"));
    }
    Ok(())
}

fn output(g: &LtiChannel, x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut y = g.c().mul_vec(x);
    g.d().mul_vec_add(u, &mut y);
    y
}

/// `‖g‖_{H∞} ≤ √n_y ‖g‖₁,∞ ≤ √(n_u n_y)(2n_x + 1)‖g‖_{H∞}` for strictly proper `g`.
pub fn check_sandwich(g: &LtiChannel) -> Check {
    let hinf_tol = 1e-6;
    let hinf = hinf_norm(g, hinf_tol).map_err(|e| e.to_string())?;
    let p = norm(g)?;
    let (nx, nu, ny) = (g.n_states() as f64, g.n_inputs() as f64, g.n_outputs() as f64);
    let middle_hi = ny.sqrt() * p.upper();
    let middle_lo = ny.sqrt() * p.lower();
    let outer = (nu * ny).sqrt() * (2.0 * nx + 1.0) * hinf * (1.0 + 4.0 * hinf_tol);
    if hinf > middle_hi {
        return Err(format!("H∞ norm {hinf} exceeds √n_y‖g‖₁,∞ = {middle_hi}"));
    }
    if middle_lo > outer {
        return Err(format!("√n_y‖g‖₁,∞ = {middle_lo} exceeds √(n_u n_y)(2n_x+1)‖g‖_H∞ = {outer}"));
    }
    Ok(())
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).max_abs()
}

pub fn check_expm_semigroup(m: &Matrix, s: f64, t: f64) -> Check {
    let whole = expm(m, s + t).map_err(|e| e.to_string())?;
    let split = &expm(m, s).map_err(|e| e.to_string())? * &expm(m, t).map_err(|e| e.to_string())?;
    let err = max_abs_diff(&whole, &split);
    if err <= 1e-9 * whole.max_abs().max(1.0) {
        Ok(())
    } else {
        Err(format!("expm(s+t) − expm(s)expm(t) = {err}"))
    }
}

/// Eigenvalues of `e^{Mt}` against `e^{λt}`, matched greedily as multisets.
pub fn check_expm_spectrum(m: &Matrix, t: f64) -> Check {
    let lam = eigenvalues(m).map_err(|e| e.to_string())?.eigenvalues;
    let mu = eigenvalues(&expm(m, t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.eigenvalues;
    let mut pool: Vec<Complex64> = mu;
    for l in lam {
        let target = (l * t).exp();
        let (idx, dist) = pool
            .iter()
            .enumerate()
            .map(|(i, m)| (i, (m - target).norm()))
            .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        if dist > 1e-8 * target.norm().max(1.0) {
            return Err(format!("no eigenvalue of expm matches e^(λt) = {target} (closest {dist})"));
        }
        pool.swap_remove(idx);
    }
    Ok(())
}

pub fn check_hurwitz_similarity(a: &Matrix, t: &Matrix) -> Check {
    let similar = &(t * a) * &t.inverse().map_err(|e| e.to_string())?;
    let (h1, h2) = (is_hurwitz(a, 0.0).map_err(|e| e.to_string())?, is_hurwitz(&similar, 0.0).map_err(|e| e.to_string())?);
    if h1 == h2 {
        Ok(())
    } else {
        Err(format!("is_hurwitz changed under similarity: {h1} vs {h2}"))
    }
}

pub fn check_lyapunov(a: &Matrix, q: &Matrix) -> Check {
    let p = solve_lyapunov(a, q).map_err(|e| e.to_string())?;
    let residual = &(&(a * &p) + &(&p * &a.transpose())) + q;
    let scale = a.max_abs() * p.max_abs() + q.max_abs();
    let err = residual.max_abs();
    if err > 1e-10 * scale.max(1.0) {
        return Err(format!("Lyapunov residual {err}"));
    }
    if !p.is_symmetric(0.0) {
        return Err("Lyapunov solution not symmetric".into());
    }
    Ok(())
}

pub fn check_care(a: &Matrix, c: &Matrix, q: &Matrix, r: &Matrix) -> Check {
    let p = solve_care(a, c, q, r).map_err(|e| e.to_string())?;
    if !p.is_symmetric(1e-12 * p.max_abs().max(1.0)) {
        return Err("CARE solution not symmetric".into());
    }
    let gain = &(&p * &c.transpose()) * &r.inverse().map_err(|e| e.to_string())?;
    let residual = &(&(&(a * &p) + &(&p * &a.transpose())) - &(&(&gain * r) * &gain.transpose())) + q;
    let scale = a.max_abs() * p.max_abs() + q.max_abs() + gain.max_abs().powi(2) * r.max_abs();
    let err = residual.max_abs();
    if err > 1e-8 * scale.max(1.0) {
        return Err(format!("CARE residual {err}"));
    }
    let closed = a - &(&gain * c);
    if !is_hurwitz(&closed, 0.0).map_err(|e| e.to_string())? {
        return Err("A − PCᵀR⁻¹C is not Hurwitz".into());
    }
    Ok(())
}

/// `‖g_ed‖ ≤ ‖g_ẽd‖ + ‖g_ẽa‖‖g_rd‖` up to the report's certified slack,
/// together with the robust-implies-tight and affinity properties.
pub fn check_corollary(p: &Plant, k: &ObserverGain) -> Check {
    let report = analyze(p, k, &DisturbanceSpec::infinity(0.5).unwrap(), None).map_err(|e| e.to_string())?;
    let tol = report.corollary_tolerance();
    if report.corollary_gap < -tol {
        return Err(format!("corollary gap {} below −{tol}", report.corollary_gap));
    }
    if report.attack_robust && report.corollary_gap > tol {
        return Err(format!("robust at ν_max with gap {} above {tol}", report.corollary_gap));
    }
    let (e1, e2, e3) = (
        report.epsilon_e_tilde_at(1.0),
        report.epsilon_e_tilde_at(2.0),
        report.epsilon_e_tilde_at(3.0),
    );
    if report.norm_getilde_a.value > 0.0 && !(e1 < e2 && e2 < e3) {
        return Err(format!("ε_ẽ not increasing in ν: {e1}, {e2}, {e3}"));
    }
    if ((e3 - e2) - (e2 - e1)).abs() > 1e-12 * e3.abs().max(1.0) {
        return Err("ε_ẽ not affine in ν".into());
    }
    Ok(())
}

/// A stabilising gain for `p`: Kalman with random covariances, or a random
/// matrix accepted only when `A − KC` is Hurwitz.
pub fn random_stabilising_gain<R: Rng>(rng: &mut R, p: &Plant) -> ObserverGain {
    let (n, ny) = (p.n_states(), p.n_outputs());
    if rng.random_bool(0.5) {
        for _ in 0..200 {
            let k = gaussian(rng, n, ny).scale(rng.random_range(0.1..2.0));
            let acl = p.a() - &(&k * p.c());
            if eigenvalues(&acl).unwrap().spectral_abscissa < -1e-3 {
                return ObserverGain::new(k);
            }
        }
    }
    let g = gaussian(rng, n, n);
    let h = gaussian(rng, ny, ny);
    let q = &(&g * &g.transpose()) + &Matrix::identity(n).scale(0.01);
    let r = &(&h * &h.transpose()) + &Matrix::identity(ny).scale(0.01);
    peakguard_core::synthesis::design_kalman(p, &q, &r).unwrap()
}

/// `∫₀^T Σⱼ |(C e^{At} B)ᵢⱼ| dt + Σⱼ |Dᵢⱼ|` maximised over rows, with the
/// impulse response propagated by classical RK4 and integrated by the
/// trapezoidal rule on a fixed grid. Shares no code with the library's
/// exponential or quadrature.
pub fn fine_grid_norm(ch: &LtiChannel, horizon: f64, dt: f64) -> f64 {
    let (n, nu, ny) = (ch.n_states(), ch.n_inputs(), ch.n_outputs());
    let a = ch.a();
    let deriv = |psi: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * nu];
        for r in 0..n {
            for j in 0..nu {
                out[r * nu + j] = (0..n).map(|l| a[(r, l)] * psi[l * nu + j]).sum();
            }
        }
        out
    };
    let row_abs = |psi: &[f64]| -> Vec<f64> {
        (0..ny)
            .map(|i| (0..nu).map(|j| (0..n).map(|l| ch.c()[(i, l)] * psi[l * nu + j]).sum::<f64>().abs()).sum())
            .collect()
    };
    let mut psi: Vec<f64> = (0..n).flat_map(|r| (0..nu).map(move |j| (r, j))).map(|(r, j)| ch.b()[(r, j)]).collect();
    let steps = (horizon / dt).round() as usize;
    let mut acc = vec![0.0; ny];
    let mut prev = row_abs(&psi);
    for _ in 0..steps {
        let axpy = |x: &[f64], k: &[f64], s: f64| x.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
        let k1 = deriv(&psi);
        let k2 = deriv(&axpy(&psi, &k1, 0.5 * dt));
        let k3 = deriv(&axpy(&psi, &k2, 0.5 * dt));
        let k4 = deriv(&axpy(&psi, &k3, dt));
        for i in 0..psi.len() {
            psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let cur = row_abs(&psi);
        for i in 0..ny {
            acc[i] += 0.5 * dt * (prev[i] + cur[i]);
        }
        prev = cur;
    }
    (0..ny)
        .map(|i| acc[i] + ch.d().row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
