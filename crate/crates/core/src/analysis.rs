//! Nominal and attacked estimation-error bounds, the no-false-alarm
//! detector threshold and the attack-robustness verdict.

use alloc::format;

use crate::linalg::{eigenvalues, Matrix, SPECTRUM_TOL};
use crate::peaknorm::{peak_to_peak_norm, LtiChannel, NormKind, NormResult, DEFAULT_NORM_TOL};
use crate::{Error, Result};

/// Plant `ẋ = Ax + Bu + N₁d`, `y = Cx + N₂d`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "PlantMatrices", into = "PlantMatrices"))]
pub struct Plant {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    n1: Matrix,
    n2: Matrix,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantMatrices {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    n1: Matrix,
    n2: Matrix,
}

#[cfg(feature = "serde")]
impl TryFrom<PlantMatrices> for Plant {
    type Error = Error;

    fn try_from(m: PlantMatrices) -> Result<Self> {
        Plant::new(m.a, m.b, m.c, m.n1, m.n2)
    }
}

#[cfg(feature = "serde")]
impl From<Plant> for PlantMatrices {
    fn from(p: Plant) -> Self {
        PlantMatrices { a: p.a, b: p.b, c: p.c, n1: p.n1, n2: p.n2 }
    }
}

impl Plant {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, n1: Matrix, n2: Matrix) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::Dimension(format!("A is {}x{}, expected square", a.nrows(), a.ncols())));
        }
        let check = |name: &str, m: &Matrix, rows: usize, cols: Option<usize>| -> Result<()> {
            if m.nrows() != rows || cols.is_some_and(|c| c != m.ncols()) {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {rows} rows{}",
                    m.nrows(),
                    m.ncols(),
                    cols.map_or(alloc::string::String::new(), |c| format!(" and {c} columns"))
                )));
            }
            Ok(())
        };
        check("B", &b, n, None)?;
        check("C", &c, c.nrows(), Some(n))?;
        check("N1", &n1, n, None)?;
        check("N2", &n2, c.nrows(), Some(n1.ncols()))?;
        Ok(Self { a, b, c, n1, n2 })
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

    pub fn n1(&self) -> &Matrix {
        &self.n1
    }

    pub fn n2(&self) -> &Matrix {
        &self.n2
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

    pub fn n_disturbances(&self) -> usize {
        self.n1.ncols()
    }

    /// Observer error dynamics `A − KC`.
    pub fn error_dynamics(&self, gain: &ObserverGain) -> Result<Matrix> {
        self.check_gain(gain)?;
        Ok(&self.a - &(gain.k() * &self.c))
    }

    fn check_gain(&self, gain: &ObserverGain) -> Result<()> {
        if gain.k().shape() != (self.n_states(), self.n_outputs()) {
            return Err(Error::Dimension(format!(
                "observer gain is {}x{}, expected {}x{}",
                gain.k().nrows(),
                gain.k().ncols(),
                self.n_states(),
                self.n_outputs()
            )));
        }
        Ok(())
    }
}

/// Observer `x̂' = Ax̂ + Bu + K(y − Cx̂)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ObserverGain {
    k: Matrix,
}

impl ObserverGain {
    pub fn new(k: Matrix) -> Self {
        Self { k }
    }

    pub fn zero(p: &Plant) -> Self {
        Self { k: Matrix::zeros(p.n_states(), p.n_outputs()) }
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn into_inner(self) -> Matrix {
        self.k
    }
}

/// Amplitude bound `|d(t)|_q ≤ ε_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisturbanceSpec {
    pub epsilon_d: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub q: NormKind,
}

impl DisturbanceSpec {
    pub fn new(epsilon_d: f64, q: NormKind) -> Result<Self> {
        if !(epsilon_d > 0.0) || !epsilon_d.is_finite() {
            return Err(Error::InvalidInput(format!("disturbance bound {epsilon_d} must be positive and finite")));
        }
        Ok(Self { epsilon_d, q })
    }

    pub fn infinity(epsilon_d: f64) -> Result<Self> {
        Self::new(epsilon_d, NormKind::Infinity)
    }
}

/// The four impulse-response channels of the estimation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Channels {
    /// `d → e` in nominal operation.
    pub ed: LtiChannel,
    /// `d → ẽ` under attack.
    pub etilde_d: LtiChannel,
    /// `a → ẽ` under attack.
    pub etilde_a: LtiChannel,
    /// `d → r` in nominal operation, with the Dirac term `N₂`.
    pub rd: LtiChannel,
}

pub fn build_channels(p: &Plant, g: &ObserverGain) -> Result<Channels> {
    let acl = p.error_dynamics(g)?;
    let k = g.k();
    let n = p.n_states();
    let id = Matrix::identity(n);
    let bcl = &p.n1 - &(k * &p.n2);
    Ok(Channels {
        ed: LtiChannel::strictly_proper(acl.clone(), bcl.clone(), id.clone())?,
        etilde_d: LtiChannel::strictly_proper(p.a.clone(), p.n1.clone(), id.clone())?,
        etilde_a: LtiChannel::strictly_proper(p.a.clone(), k.scale(-1.0), id)?,
        rd: LtiChannel::new(acl, bcl, p.c.clone(), p.n2.clone())?,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsReport {
    pub norm_ged: NormResult,
    pub norm_getilde_d: NormResult,
    pub norm_getilde_a: NormResult,
    pub norm_grd: NormResult,
    pub epsilon_d: f64,
    pub epsilon_e: f64,
    pub epsilon_e_tilde: f64,
    pub nu_max: f64,
    pub nu_used: f64,
    pub spectral_abscissa_a: f64,
    pub hurwitz_a: bool,
    /// `A` has its spectral abscissa on the imaginary axis (within the
    /// spectrum tolerance). `ε_ẽ` is then reported as `+∞`.
    pub marginal_a: bool,
    pub attack_robust: bool,
    /// `g_ed` and `g_ẽd` are the same realisation (zero gain), so their
    /// norms cancel exactly in the robustness inequality.
    pub channels_coincide: bool,
    /// `‖g_ẽd‖ + ‖g_ẽa‖‖g_rd‖ − ‖g_ed‖`, nonnegative up to
    /// [`BoundsReport::corollary_tolerance`].
    pub corollary_gap: f64,
}

impl BoundsReport {
    /// Numerical slack allowed on `corollary_gap`, assembled from the tail
    /// and quadrature bounds of the four norms.
    pub fn corollary_tolerance(&self) -> f64 {
        let (ed, dd, da, rd) = (&self.norm_ged, &self.norm_getilde_d, &self.norm_getilde_a, &self.norm_grd);
        if !dd.is_finite() {
            return 0.0;
        }
        (dd.upper() - dd.value) + (da.upper() * rd.upper() - da.value * rd.value) + ed.quadrature_change
    }

    /// Certified version of the robustness inequality at threshold `nu`:
    /// upper bounds on the attacked side, lower bound on the nominal side.
    pub fn robust_at(&self, nu: f64) -> bool {
        if !self.hurwitz_a {
            return false;
        }
        if self.channels_coincide {
            return self.norm_getilde_a.upper() * nu <= 0.0;
        }
        self.norm_getilde_d.upper() * self.epsilon_d + self.norm_getilde_a.upper() * nu
            <= self.norm_ged.lower() * self.epsilon_d
    }

    /// Attacked bound `ε_ẽ` at another threshold.
    pub fn epsilon_e_tilde_at(&self, nu: f64) -> f64 {
        if !self.hurwitz_a {
            return f64::INFINITY;
        }
        self.norm_getilde_d.value * self.epsilon_d + self.norm_getilde_a.value * nu
    }
}

/// [`analyze_with_tol`] at the default norm tolerance.
pub fn analyze(p: &Plant, g: &ObserverGain, d: &DisturbanceSpec, nu: Option<f64>) -> Result<BoundsReport> {
    analyze_with_tol(p, g, d, nu, DEFAULT_NORM_TOL)
}

/// Computes the bounds and verdicts. `nu` defaults to `ν_max`.
pub fn analyze_with_tol(
    p: &Plant,
    g: &ObserverGain,
    d: &DisturbanceSpec,
    nu: Option<f64>,
    tol: f64,
) -> Result<BoundsReport> {
    let d = DisturbanceSpec::new(d.epsilon_d, d.q)?;
    if let Some(nu) = nu {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidInput(format!("detector threshold {nu} must be positive and finite")));
        }
    }
    let ch = build_channels(p, g)?;
    let observer_abscissa = eigenvalues(ch.ed.a())?.spectral_abscissa;
    if !(observer_abscissa < -SPECTRUM_TOL) {
        return Err(Error::UnstableObserver { abscissa: observer_abscissa });
    }
    let channels_coincide = ch.ed == ch.etilde_d;
    let abscissa = eigenvalues(p.a())?.spectral_abscissa;
    let hurwitz_a = abscissa < -SPECTRUM_TOL;
    let marginal_a = abscissa.abs() <= SPECTRUM_TOL;

    let norm_ged = peak_to_peak_norm(&ch.ed, d.q, tol)?;
    let norm_grd = peak_to_peak_norm(&ch.rd, d.q, tol)?;
    let (norm_getilde_d, norm_getilde_a) = if hurwitz_a {
        (peak_to_peak_norm(&ch.etilde_d, d.q, tol)?, peak_to_peak_norm(&ch.etilde_a, d.q, tol)?)
    } else {
        let n = p.n_states();
        (NormResult::unbounded(n), NormResult::unbounded(n))
    };

    let eps = d.epsilon_d;
    let nu_max = norm_grd.value * eps;
    let nu_used = nu.unwrap_or(nu_max);
    let epsilon_e_tilde = if hurwitz_a {
        norm_getilde_d.value * eps + norm_getilde_a.value * nu_used
    } else {
        f64::INFINITY
    };
    let corollary_gap = norm_getilde_d.value + norm_getilde_a.value * norm_grd.value - norm_ged.value;

    let mut report = BoundsReport {
        epsilon_e: norm_ged.value * eps,
        norm_ged,
        norm_getilde_d,
        norm_getilde_a,
        norm_grd,
        epsilon_d: eps,
        epsilon_e_tilde,
        nu_max,
        nu_used,
        spectral_abscissa_a: abscissa,
        hurwitz_a,
        marginal_a,
        attack_robust: false,
        channels_coincide,
        corollary_gap,
    };
    report.attack_robust = report.robust_at(nu_used);
    Ok(report)
}

/// Largest threshold keeping the attacked bound below the nominal one,
/// `ν* = (‖g_ed‖ − ‖g_ẽd‖) ε_d / ‖g_ẽa‖`. `Some(∞)` when the attack
/// channel vanishes.
pub fn min_robust_threshold(report: &BoundsReport) -> Option<f64> {
    if !report.hurwitz_a {
        return None;
    }
    robust_threshold_from_norms(
        report.norm_ged.value,
        report.norm_getilde_d.value,
        report.norm_getilde_a.value,
        report.epsilon_d,
    )
}

pub fn robust_threshold_from_norms(ged: f64, getilde_d: f64, getilde_a: f64, epsilon_d: f64) -> Option<f64> {
    let margin = (ged - getilde_d) * epsilon_d;
    if !(margin > 0.0) {
        return None;
    }
    if getilde_a == 0.0 {
        return Some(f64::INFINITY);
    }
    Some(margin / getilde_a)
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

    fn illustrative_a() -> Matrix {
        Matrix::from_rows(&[[-0.2, 1.0], [0.0, -1.0]]).unwrap()
    }

    #[test]
    fn plant_rejects_inconsistent_shapes() {
        let bad = Plant::new(
            illustrative_a(),
            Matrix::zeros(3, 1),
            Matrix::identity(2),
            Matrix::identity(2),
            Matrix::zeros(2, 2),
        );
        assert!(matches!(bad, Err(Error::Dimension(_))));
        let bad_n2 = Plant::new(
            illustrative_a(),
            Matrix::zeros(2, 1),
            Matrix::identity(2),
            Matrix::identity(2),
            Matrix::zeros(2, 3),
        );
        assert!(bad_n2.is_err());
    }

    #[test]
    fn zero_gain_channels_coincide() {
        let p = plant(illustrative_a());
        let ch = build_channels(&p, &ObserverGain::zero(&p)).unwrap();
        assert_eq!(ch.ed, ch.etilde_d);
        assert_eq!(ch.etilde_a.b().max_abs(), 0.0);
    }

    #[test]
    fn zero_gain_is_attack_robust() {
        let p = plant(illustrative_a());
        let d = DisturbanceSpec::infinity(0.5).unwrap();
        for nu in [None, Some(0.3), Some(50.0)] {
            let r = analyze(&p, &ObserverGain::zero(&p), &d, nu).unwrap();
            assert_eq!(r.norm_getilde_a.value, 0.0);
            assert_eq!(r.epsilon_e_tilde, r.epsilon_e);
            assert!(r.hurwitz_a && r.attack_robust);
        }
        let r = analyze(&p, &ObserverGain::zero(&p), &d, None).unwrap();
        assert_eq!(min_robust_threshold(&r), None);
    }

    #[test]
    fn unstable_plant_reports_unbounded_attacked_error() {
        let p = plant(Matrix::from_diag(&[1.0, -1.0]));
        let k = ObserverGain::new(Matrix::from_diag(&[3.0, 0.0]));
        let r = analyze(&p, &k, &DisturbanceSpec::infinity(0.5).unwrap(), None).unwrap();
        assert!(!r.hurwitz_a);
        assert!(!r.marginal_a);
        assert!(r.epsilon_e_tilde.is_infinite());
        assert!(!r.attack_robust);
        assert!(r.epsilon_e.is_finite());
    }

    #[test]
    fn marginal_plant_is_flagged() {
        let p = plant(Matrix::from_diag(&[0.0, -1.0]));
        let k = ObserverGain::new(Matrix::from_diag(&[1.0, 0.0]));
        let r = analyze(&p, &k, &DisturbanceSpec::infinity(0.5).unwrap(), None).unwrap();
        assert!(r.marginal_a && !r.hurwitz_a);
        assert_eq!(r.epsilon_e_tilde, f64::INFINITY);
    }

    #[test]
    fn unstable_observer_is_an_error() {
        let p = plant(illustrative_a());
        let k = ObserverGain::new(Matrix::from_diag(&[-1.0, 0.0]));
        let err = analyze(&p, &k, &DisturbanceSpec::infinity(0.5).unwrap(), None);
        assert!(matches!(err, Err(Error::UnstableObserver { .. })));
    }

    #[test]
    fn threshold_arithmetic() {
        assert_eq!(robust_threshold_from_norms(2.0, 1.0, 1.0, 0.5), Some(0.5));
        assert_eq!(robust_threshold_from_norms(2.0, 1.0, 0.0, 0.5), Some(f64::INFINITY));
        assert_eq!(robust_threshold_from_norms(2.44, 9.97, 8.36, 0.5), None);
        assert_eq!(robust_threshold_from_norms(1.0, 1.0, 1.0, 0.5), None);
    }

    #[test]
    fn identities_and_affinity_in_nu() {
        let p = plant(illustrative_a());
        let k = ObserverGain::new(Matrix::from_rows(&[[1.0, 0.5], [0.2, 1.5]]).unwrap());
        let d = DisturbanceSpec::infinity(0.5).unwrap();
        let r = analyze(&p, &k, &d, None).unwrap();
        assert_eq!(r.epsilon_e, r.norm_ged.value * 0.5);
        assert_eq!(r.nu_max, r.norm_grd.value * 0.5);
        assert_eq!(r.nu_used, r.nu_max);
        assert_eq!(r.epsilon_e_tilde, r.norm_getilde_d.value * 0.5 + r.norm_getilde_a.value * r.nu_max);
        assert!(r.corollary_gap >= -r.corollary_tolerance());
        let (e1, e2, e3) = (r.epsilon_e_tilde_at(1.0), r.epsilon_e_tilde_at(2.0), r.epsilon_e_tilde_at(3.0));
        assert!(e1 < e2 && e2 < e3);
        assert!(((e3 - e2) - (e2 - e1)).abs() < 1e-12);
        let again = analyze(&p, &k, &d, None).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn rejects_bad_threshold_and_disturbance() {
        let p = plant(illustrative_a());
        let k = ObserverGain::zero(&p);
        let d = DisturbanceSpec::infinity(0.5).unwrap();
        assert!(analyze(&p, &k, &d, Some(0.0)).is_err());
        assert!(analyze(&p, &k, &d, Some(f64::NAN)).is_err());
        assert!(DisturbanceSpec::infinity(-1.0).is_err());
        assert!(analyze(&p, &ObserverGain::new(Matrix::zeros(2, 3)), &d, None).is_err());
    }
}
