//! Induced L∞ (peak-to-peak) norms of LTI channels.
//!
//! A channel has the impulse response `g(t) = C e^{At} B + D δ(t)`. For the
//! vector ∞-norm the induced norm is the ℓ₁ gain: the largest row sum of the
//! integrated absolute impulse response, plus the absolute Dirac weights.

mod hinf;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{eigenvalues, expm, solve_lyapunov, Matrix};
use crate::{Error, Result};

pub use hinf::{hinf_norm, sigma_max_at};

/// Default absolute tolerance for [`peak_to_peak_norm`].
pub const DEFAULT_NORM_TOL: f64 = 1e-4;
/// Upper limit on the number of quadrature intervals.
pub const MAX_QUADRATURE_STEPS: usize = 1 << 22;

/// State-space realisation `(A, B, C, D)` of an input-output channel whose
/// impulse response is `C e^{At} B + D δ(t)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LtiChannel {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl LtiChannel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "channel state matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "channel with {n} states has B {}x{} and C {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::Dimension(format!(
                "feedthrough is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Channel without a Dirac term.
    pub fn strictly_proper(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let d = Matrix::zeros(c.nrows().max(1), b.ncols().max(1));
        Self::new(a, b, c, d)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Impulse-response kernel `C e^{At} B` (without the Dirac term).
    pub fn kernel_at(&self, t: f64) -> Result<Matrix> {
        Ok(&(&self.c * &expm(&self.a, t)?) * &self.b)
    }

    /// Sum `f + g` realised in parallel.
    pub fn parallel(&self, other: &LtiChannel) -> Result<Self> {
        if self.n_inputs() != other.n_inputs() || self.n_outputs() != other.n_outputs() {
            return Err(Error::Dimension("parallel channels need equal input/output sizes".into()));
        }
        Self::new(
            Matrix::block_diag(&[&self.a, &other.a]),
            Matrix::vstack(&[&self.b, &other.b])?,
            Matrix::hstack(&[&self.c, &other.c])?,
            &self.d + &other.d,
        )
    }

    /// Composition `self ∘ inner`: the output of `inner` drives `self`.
    pub fn series(&self, inner: &LtiChannel) -> Result<Self> {
        if self.n_inputs() != inner.n_outputs() {
            return Err(Error::Dimension("series connection size mismatch".into()));
        }
        let (nh, nf) = (inner.n_states(), self.n_states());
        let mut a = Matrix::zeros(nh + nf, nh + nf);
        a.set_block(0, 0, &inner.a);
        a.set_block(nh, 0, &(&self.b * &inner.c));
        a.set_block(nh, nh, &self.a);
        let b = Matrix::vstack(&[&inner.b, &(&self.b * &inner.d)])?;
        let c = Matrix::hstack(&[&(&self.d * &inner.c), &self.c])?;
        let d = &self.d * &inner.d;
        Self::new(a, b, c, d)
    }

    /// `α · g`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.scale(alpha),
            d: self.d.scale(alpha),
        }
    }
}

/// Vector norm used for signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NormKind {
    One,
    Two,
    #[default]
    #[cfg_attr(feature = "serde", serde(alias = "inf"))]
    Infinity,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormResult {
    /// Truncated norm; the exact norm lies in `[value, value + tail_bound]`
    /// up to the quadrature error.
    pub value: f64,
    pub tail_bound: f64,
    /// Truncation horizon in seconds.
    pub horizon: f64,
    pub quadrature_steps: usize,
    /// Change of the estimate over the last grid refinement.
    pub quadrature_change: f64,
    /// Per-output-row gains (the norm is their maximum).
    pub row_gains: Vec<f64>,
}

impl NormResult {
    /// Upper end of the norm interval, covering the tail and the last
    /// quadrature change.
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound + self.quadrature_change
    }

    pub fn lower(&self) -> f64 {
        (self.value - self.quadrature_change).max(0.0)
    }

    /// Placeholder for a channel whose norm is infinite.
    pub fn unbounded(outputs: usize) -> Self {
        Self {
            value: f64::INFINITY,
            tail_bound: 0.0,
            horizon: f64::INFINITY,
            quadrature_steps: 0,
            quadrature_change: 0.0,
            row_gains: alloc::vec![f64::INFINITY; outputs],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// Index of the row attaining the norm.
    pub fn argmax_row(&self) -> usize {
        self.row_gains
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0
    }
}

/// Exponential envelope `‖e^{At}‖₂ ≤ kappa · e^{−rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub kappa: f64,
    pub rate: f64,
}

impl DecayEnvelope {
    /// `∫_T^∞ kappa e^{−rate t} dt`.
    pub fn tail_integral(&self, horizon: f64) -> f64 {
        self.kappa * (-self.rate * horizon).exp() / self.rate
    }
}

/// Lyapunov-based decay envelope for a Hurwitz matrix.
///
/// For a shift `σ < |α(A)|` the solution `X` of
/// `(A + σI)ᵀ X + X (A + σI) = −I` gives
/// `‖e^{At}‖₂ ≤ √(λmax/λmin) · e^{−(σ + 1/(2λmax)) t}`. A few shifts are
/// tried and the envelope with the shortest horizon for `tol` is kept.
pub fn decay_envelope(a: &Matrix, scale: f64, tol: f64) -> Result<DecayEnvelope> {
    let abscissa = eigenvalues(a)?.spectral_abscissa;
    if abscissa >= 0.0 {
        return Err(Error::Infeasible(format!(
            "norm infinite: channel state matrix is not Hurwitz (spectral abscissa {abscissa})"
        )));
    }
    let n = a.nrows();
    let id = Matrix::identity(n);
    let mut best: Option<(f64, DecayEnvelope)> = None;
    for &frac in &[0.0, 0.25, 0.5, 0.75, 0.9] {
        let sigma = -abscissa * frac;
        let shifted = &a.transpose() + &id.scale(sigma);
        let Ok(x) = solve_lyapunov(&shifted, &id) else {
            continue;
        };
        let eig = x.symmetric_eigen();
        if !(eig.min() > 0.0) {
            continue;
        }
        let env = DecayEnvelope {
            kappa: (eig.max() / eig.min()).sqrt(),
            rate: sigma + 0.5 / eig.max(),
        };
        let horizon = horizon_for(&env, scale, tol);
        if best.as_ref().is_none_or(|(h, _)| horizon < *h) {
            best = Some((horizon, env));
        }
    }
    best.map(|(_, env)| env).ok_or(Error::NumericalFailure {
        what: "Lyapunov decay certificate",
        iterations: 5,
    })
}

fn horizon_for(env: &DecayEnvelope, scale: f64, tol: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    // half the budget goes to the tail, the rest covers quadrature
    ((2.0 * scale * env.kappa / (env.rate * tol)).ln() / env.rate).max(0.0)
}

/// Peak-to-peak norm `‖g‖₁,q` with certified truncation.
///
/// Only `q = ∞` is implemented. The integral runs to a horizon where the
/// Lyapunov tail certificate is at most `tol / 2`; composite Simpson quadrature
/// is refined by grid doubling until two successive estimates differ by at
/// most `tol / 10`.
pub fn peak_to_peak_norm(ch: &LtiChannel, kind: NormKind, tol: f64) -> Result<NormResult> {
    peak_to_peak_norm_capped(ch, kind, tol, MAX_QUADRATURE_STEPS)
}

/// [`peak_to_peak_norm`] with an explicit cap on quadrature intervals.
pub fn peak_to_peak_norm_capped(
    ch: &LtiChannel,
    kind: NormKind,
    tol: f64,
    max_steps: usize,
) -> Result<NormResult> {
    if kind != NormKind::Infinity {
        return Err(Error::NotImplemented("peak-to-peak norm for q other than infinity"));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!("norm tolerance {tol} must be positive")));
    }
    let ny = ch.n_outputs();
    let nu = ch.n_inputs();
    let dirac: Vec<f64> = (0..ny)
        .map(|i| ch.d.row(i).iter().map(|v| v.abs()).sum())
        .collect();

    // Σⱼ ‖cᵢ‖₂ ‖bⱼ‖₂ bounds row i of the kernel through ‖e^{At}‖₂.
    let b_norms: Vec<f64> = (0..nu)
        .map(|j| ch.b.col(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let row_scale: Vec<f64> = (0..ny)
        .map(|i| {
            let ci = ch.c.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            b_norms.iter().map(|bj| ci * bj).sum()
        })
        .collect();
    let scale = row_scale.iter().copied().fold(0.0, f64::max);

    let env = decay_envelope(&ch.a, scale, tol)?;
    if scale == 0.0 {
        let value = dirac.iter().copied().fold(0.0, f64::max);
        return Ok(NormResult {
            value,
            tail_bound: 0.0,
            horizon: 0.0,
            quadrature_steps: 0,
            quadrature_change: 0.0,
            row_gains: dirac,
        });
    }
    let horizon = horizon_for(&env, scale, tol);
    let tail_bound = scale * env.tail_integral(horizon);

    // Resolve the fastest dynamics with a handful of points from the start.
    let speed = ch.a.norm_inf().max(env.rate);
    let mut steps = ((horizon * speed * 4.0).ceil() as usize).clamp(64, max_steps.max(64));
    steps += steps % 2;
    let mut previous = simpson_rows(ch, horizon, steps)?;
    loop {
        let next_steps = steps * 2;
        if next_steps > max_steps {
            let value = max_with_dirac(&previous, &dirac);
            return Err(Error::NormNotConverged {
                value,
                tail_bound,
                step_change: f64::NAN,
            });
        }
        let refined = simpson_rows(ch, horizon, next_steps)?;
        let change = refined
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        steps = next_steps;
        previous = refined;
        if change <= tol / 10.0 {
            let row_gains: Vec<f64> = previous.iter().zip(&dirac).map(|(a, d)| a + d).collect();
            let value = row_gains.iter().copied().fold(0.0, f64::max);
            return Ok(NormResult {
                value,
                tail_bound,
                horizon,
                quadrature_steps: steps,
                quadrature_change: change,
                row_gains,
            });
        }
    }
}

fn max_with_dirac(rows: &[f64], dirac: &[f64]) -> f64 {
    rows.iter().zip(dirac).map(|(a, d)| a + d).fold(0.0, f64::max)
}

/// Simpson estimate of `Σⱼ ∫₀^T |(C e^{At} B)ᵢⱼ| dt` for every row `i`.
fn simpson_rows(ch: &LtiChannel, horizon: f64, steps: usize) -> Result<Vec<f64>> {
    debug_assert!(steps.is_multiple_of(2));
    let h = horizon / steps as f64;
    let step = expm(&ch.a, h)?;
    let (ny, nu, n) = (ch.n_outputs(), ch.n_inputs(), ch.n_states());
    // ψ_k = e^{A k h} B, advanced by ψ_{k+1} = e^{Ah} ψ_k
    let mut psi = ch.b.clone();
    let mut next = Matrix::zeros(n, nu);
    let mut acc = vec![0.0; ny];
    for k in 0..=steps {
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        for (i, acc_i) in acc.iter_mut().enumerate() {
            let ci = ch.c.row(i);
            let mut row = 0.0;
            for j in 0..nu {
                let mut g = 0.0;
                for (l, c) in ci.iter().enumerate() {
                    g += c * psi[(l, j)];
                }
                row += g.abs();
            }
            *acc_i += w * row;
        }
        if k < steps {
            for r in 0..n {
                for j in 0..nu {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += step[(r, l)] * psi[(l, j)];
                    }
                    next[(r, j)] = s;
                }
            }
            core::mem::swap(&mut psi, &mut next);
        }
    }
    Ok(acc.into_iter().map(|s| s * h / 3.0).collect())
}
