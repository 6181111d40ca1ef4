//! Per-system protocols of the three studies plus the illustrative
//! safety-filter deactivation scenario. Batch drivers call these with a
//! per-run seed so results do not depend on scheduling.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    derive_seed, generate_random_system, run, simulate, Attack, Disturbance, Input, RandomSystemSpec,
    SafetyFilterConfig, SimConfig, SimSetup, SimSummary, SimTrace,
};
use crate::analysis::{analyze, BoundsReport, DisturbanceSpec, ObserverGain, Plant};
use crate::linalg::{expm, Matrix};
use crate::stats::quantiles;
use crate::synthesis::{design_attack_aware, design_kalman_uniform, SolverOptions};
use crate::{Error, Result};

const SALT_NOMINAL: u64 = 1;
const SALT_ATTACKED: u64 = 2;
const SALT_FALSE_ALARM: u64 = 3;
const SALT_CONSERVATISM: u64 = 4;

/// Disturbance bound of the studies (uniform on `[−0.5, 0.5]`).
pub const STUDY_EPSILON_D: f64 = 0.5;
pub const TABLE_QUANTILES: [f64; 4] = [0.9, 0.95, 0.99, 1.0];

/// Two-state example with `A = (−0.2, 1; 0, −1)`, `B = (0, 1)ᵀ`, `C = I`.
pub fn illustrative_plant() -> Plant {
    Plant::new(
        Matrix::from_rows(&[[-0.2, 1.0], [0.0, -1.0]]).expect("literal"),
        Matrix::from_rows(&[[0.0], [1.0]]).expect("literal"),
        Matrix::identity(2),
        Matrix::hstack(&[&Matrix::identity(2), &Matrix::zeros(2, 2)]).expect("literal"),
        Matrix::hstack(&[&Matrix::zeros(2, 2), &Matrix::identity(2)]).expect("literal"),
    )
    .expect("illustrative plant is consistent")
}

/// Safe set `h(x) = −x₁ − x₂ ≥ 0`, `α(h) = h`, `u_des = 1`.
pub fn illustrative_filter(error_bound_m: f64) -> SafetyFilterConfig {
    SafetyFilterConfig::new(vec![-1.0, -1.0], 0.0, 1.0, error_bound_m, vec![1.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum BoundChoice {
    /// `M = ε_e`.
    Nominal,
    /// `M = ε_ẽ`.
    Attacked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IllustrativeRun {
    pub trace: SimTrace,
    pub summary: SimSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IllustrativeOutcome {
    pub report: BoundsReport,
    pub gain: ObserverGain,
    pub bound_m: f64,
    pub nominal: IllustrativeRun,
    pub attacked: IllustrativeRun,
}

/// Nominal and attacked runs of the example with the Kalman baseline and
/// `M` chosen per `bound`. `base` supplies `dt`, `t_end`, the seed and the
/// initial states; `ν` is set to `ν_max`.
pub fn run_illustrative_experiment(bound: BoundChoice, base: &SimConfig) -> Result<IllustrativeOutcome> {
    let plant = illustrative_plant();
    let gain = design_kalman_uniform(&plant, base.epsilon_d)?;
    let report = analyze(&plant, &gain, &DisturbanceSpec::infinity(base.epsilon_d)?, None)?;
    let bound_m = match bound {
        BoundChoice::Nominal => report.epsilon_e,
        BoundChoice::Attacked => report.epsilon_e_tilde,
    };
    let filter = illustrative_filter(bound_m);
    let mut cfg = base.clone();
    cfg.nu = report.nu_max;
    cfg.attack_enabled = true;
    let (nominal, attacked) = run_scenario(&plant, &gain, &cfg, Some(&filter))?;
    let attacked = attacked.expect("attack enabled");
    Ok(IllustrativeOutcome { report, gain, bound_m, nominal, attacked })
}

/// Nominal run and, when `cfg.attack_enabled`, an attacked run under the
/// deactivation attack, both with uniform disturbance. The two runs draw
/// from seeds derived from `cfg.seed`. Without a filter the input is zero.
pub fn run_scenario(
    plant: &Plant,
    gain: &ObserverGain,
    cfg: &SimConfig,
    filter: Option<&SafetyFilterConfig>,
) -> Result<(IllustrativeRun, Option<IllustrativeRun>)> {
    let setup = || SimSetup {
        input: filter.map_or(Input::Zero, Input::SafetyFilter),
        disturbance: Disturbance::Uniform,
        attack: Attack::Deactivation,
    };
    let mut nominal_cfg = cfg.clone();
    nominal_cfg.attack_enabled = false;
    nominal_cfg.seed = derive_seed(cfg.seed, 0, SALT_NOMINAL);
    let (trace, summary) = simulate(plant, gain, &nominal_cfg, setup())?;
    let nominal = IllustrativeRun { trace, summary };
    if !cfg.attack_enabled {
        return Ok((nominal, None));
    }
    let mut attacked_cfg = cfg.clone();
    attacked_cfg.seed = derive_seed(cfg.seed, 0, SALT_ATTACKED);
    let (trace, summary) = simulate(plant, gain, &attacked_cfg, setup())?;
    Ok((nominal, Some(IllustrativeRun { trace, summary })))
}

/// Default configuration of the example: `x(0) = x̂(0) = (−2, 0)`.
pub fn illustrative_config(seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(STUDY_EPSILON_D, 0.0, vec![-2.0, 0.0], vec![-2.0, 0.0]);
    cfg.seed = seed;
    cfg
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase", tag = "kind"))]
pub enum ObserverKind {
    Kalman,
    Designed { beta: f64 },
}

impl ObserverKind {
    pub fn design(&self, plant: &Plant, epsilon_d: f64, opts: &SolverOptions) -> Result<ObserverGain> {
        match *self {
            ObserverKind::Kalman => design_kalman_uniform(plant, epsilon_d),
            ObserverKind::Designed { beta } => Ok(design_attack_aware(plant, beta, opts)?.gain),
        }
    }

    pub fn label(&self) -> alloc::string::String {
        match self {
            ObserverKind::Kalman => "kalman".into(),
            ObserverKind::Designed { beta } => format!("designed(beta={beta})"),
        }
    }
}

/// Settings shared by the random-system studies.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct StudyConfig {
    pub master_seed: u64,
    pub n_x: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub stability_margin: f64,
    pub epsilon_d: f64,
    pub dt: f64,
    pub t_end: f64,
    pub solver: SolverOptions,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            n_x: 2,
            n_u: 2,
            n_y: 2,
            stability_margin: super::DEFAULT_STABILITY_MARGIN,
            epsilon_d: STUDY_EPSILON_D,
            dt: super::DEFAULT_DT,
            t_end: super::DEFAULT_T_END,
            solver: SolverOptions::default(),
        }
    }
}

impl StudyConfig {
    pub fn system_spec(&self, index: u64) -> RandomSystemSpec {
        RandomSystemSpec {
            n_x: self.n_x,
            n_u: self.n_u,
            n_y: self.n_y,
            stability_margin: self.stability_margin,
            seed: self.master_seed,
            stream: index,
        }
    }

    pub fn system(&self, index: u64) -> Result<Plant> {
        generate_random_system(&self.system_spec(index))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FalseAlarmRecord {
    pub index: u64,
    /// `ν_max` from the computed norm.
    pub nu_max: f64,
    /// Reference threshold `‖g_rd‖ ε_d` with the norm's upper bound; rates
    /// are measured at fractions of this value.
    pub nu_reference: f64,
    pub samples: usize,
    pub rates: Vec<f64>,
}

/// Nominal run from `x = x̂ = 0` under uniform disturbance; the rate at a
/// fraction `f` is the share of detector samples with `|r|_∞ > f ν_ref`.
pub fn false_alarm_system(study: &StudyConfig, index: u64, observer: ObserverKind, fractions: &[f64]) -> Result<FalseAlarmRecord> {
    if fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::InvalidInput("threshold fractions must lie in (0, 1]".into()));
    }
    let plant = study.system(index)?;
    let gain = observer.design(&plant, study.epsilon_d, &study.solver)?;
    let report = analyze(&plant, &gain, &DisturbanceSpec::infinity(study.epsilon_d)?, None)?;
    let nu_reference = report.norm_grd.upper() * study.epsilon_d;
    let n = plant.n_states();
    let mut cfg = SimConfig::new(study.epsilon_d, nu_reference, vec![0.0; n], vec![0.0; n]);
    cfg.dt = study.dt;
    cfg.t_end = study.t_end;
    // identical realisation for every observer of the same system
    cfg.seed = derive_seed(study.master_seed, index, SALT_FALSE_ALARM);
    let thresholds: Vec<f64> = fractions.iter().map(|f| f * nu_reference).collect();
    let mut counts = vec![0usize; fractions.len()];
    let setup = SimSetup { input: Input::Zero, disturbance: Disturbance::Uniform, attack: Attack::Deactivation };
    let summary = run(&plant, &gain, &cfg, setup, &mut |s| {
        for (c, th) in counts.iter_mut().zip(&thresholds) {
            *c += (s.r_inf > *th) as usize;
        }
    })?;
    let rates = counts.iter().map(|&c| c as f64 / summary.samples as f64).collect();
    Ok(FalseAlarmRecord { index, nu_max: report.nu_max, nu_reference, samples: summary.samples, rates })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateSummary {
    pub fraction: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Median and 5 % / 95 % quantiles across systems, per fraction.
pub fn summarize_false_alarms(records: &[FalseAlarmRecord], fractions: &[f64]) -> Vec<RateSummary> {
    fractions
        .iter()
        .enumerate()
        .filter_map(|(i, &fraction)| {
            let rates: Vec<f64> = records.iter().map(|r| r.rates[i]).collect();
            let q = quantiles(&rates, &[0.5, 0.05, 0.95])?;
            Some(RateSummary { fraction, median: q[0], q05: q[1], q95: q[2] })
        })
        .collect()
}

/// Disturbance and attack realisation of the conservatism study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ConservatismMode {
    /// Peak-seeking signals: `d` and `a` are the threshold-saturating signs
    /// of the time-reversed impulse responses of the row of `ẽ` with the
    /// largest bound, so `ẽ` approaches its worst case at the end of the
    /// run.
    #[default]
    Aligned,
    /// Uniform random disturbance with a constant threshold-saturating
    /// attack aligned with the steady-state gain of the worst row.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConservatismRecord {
    pub index: u64,
    pub epsilon_e: f64,
    pub epsilon_e_tilde: f64,
    /// `ε_ẽ` with the certified norm upper bounds.
    pub epsilon_e_tilde_certified: f64,
    pub empirical_peak: f64,
    pub horizon: f64,
    pub alarms: usize,
    /// `ε_ẽ (certified) / sup_t |ẽ(t)|_∞`.
    pub ratio: f64,
}

/// Attacked run with `ν = ν_max` for one random system.
pub fn conservatism_system(study: &StudyConfig, index: u64, observer: ObserverKind, mode: ConservatismMode) -> Result<ConservatismRecord> {
    let plant = study.system(index)?;
    let gain = observer.design(&plant, study.epsilon_d, &study.solver)?;
    let report = analyze(&plant, &gain, &DisturbanceSpec::infinity(study.epsilon_d)?, None)?;
    if !report.hurwitz_a {
        return Err(Error::Infeasible("attacked error is unbounded for a non-Hurwitz plant".into()));
    }
    let eps = study.epsilon_d;
    let nu = report.nu_max;
    let (rd, ra) = (&report.norm_getilde_d.row_gains, &report.norm_getilde_a.row_gains);
    let row = (0..rd.len())
        .max_by(|&i, &j| (eps * rd[i] + nu * ra[i]).total_cmp(&(eps * rd[j] + nu * ra[j])))
        .unwrap_or(0);
    let n = plant.n_states();
    let mut cfg = SimConfig::new(eps, nu, vec![0.0; n], vec![0.0; n]);
    cfg.dt = study.dt;
    cfg.attack_enabled = true;
    cfg.seed = derive_seed(study.master_seed, index, SALT_CONSERVATISM);

    let summary = match mode {
        ConservatismMode::Aligned => {
            let horizon = report.norm_getilde_d.horizon.max(report.norm_getilde_a.horizon);
            let steps = (horizon / cfg.dt).ceil().max(1.0) as usize;
            cfg.t_end = steps as f64 * cfg.dt;
            let (wd, wa) = reversed_kernel_signs(&plant, &gain, row, steps, cfg.dt)?;
            let nd = plant.n_disturbances();
            let ny = plant.n_outputs();
            let dt = cfg.dt;
            let step_of = move |t: f64| ((t / dt).round() as usize).min(steps - 1);
            let d_sig = move |t: f64, _: &[f64], out: &mut [f64]| {
                let k = step_of(t);
                for j in 0..nd {
                    out[j] = eps * wd[k * nd + j];
                }
            };
            let a_sig = move |t: f64, _: &[f64], out: &mut [f64]| {
                let k = step_of(t);
                for j in 0..ny {
                    out[j] = nu * wa[k * ny + j];
                }
            };
            let setup = SimSetup {
                input: Input::Zero,
                disturbance: Disturbance::Custom(Box::new(d_sig)),
                attack: Attack::Custom(Box::new(a_sig)),
            };
            run(&plant, &gain, &cfg, setup, &mut |_| {})?
        }
        ConservatismMode::Random => {
            cfg.t_end = study.t_end;
            // ẽ_ss = A⁻¹ K a for constant a
            let dc = plant.a().solve(gain.k())?;
            let a_const: Vec<f64> = (0..plant.n_outputs()).map(|j| if dc[(row, j)] >= 0.0 { nu } else { -nu }).collect();
            let a_sig = move |_: f64, _: &[f64], out: &mut [f64]| out.copy_from_slice(&a_const);
            let setup = SimSetup { input: Input::Zero, disturbance: Disturbance::Uniform, attack: Attack::Custom(Box::new(a_sig)) };
            run(&plant, &gain, &cfg, setup, &mut |_| {})?
        }
    };
    let certified = report.norm_getilde_d.upper() * eps + report.norm_getilde_a.upper() * nu;
    let ratio = if summary.max_e_inf > 0.0 { certified / summary.max_e_inf } else { f64::INFINITY };
    Ok(ConservatismRecord {
        index,
        epsilon_e: report.epsilon_e,
        epsilon_e_tilde: report.epsilon_e_tilde,
        epsilon_e_tilde_certified: certified,
        empirical_peak: summary.max_e_inf,
        horizon: cfg.t_end,
        alarms: summary.alarms,
        ratio,
    })
}

/// Sign patterns (`±1`, zero mapped to `+1`) of row `row` of `e^{Aτ} N₁`
/// and `−e^{Aτ} K` at `τ = T − t_k − dt/2` for step `k`, row-major by step.
fn reversed_kernel_signs(plant: &Plant, gain: &ObserverGain, row: usize, steps: usize, dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let nd = plant.n_disturbances();
    let ny = plant.n_outputs();
    let step = expm(plant.a(), dt)?;
    let mut phi = expm(plant.a(), 0.5 * dt)?;
    let neg_k = gain.k().scale(-1.0);
    let mut wd = vec![0.0; steps * nd];
    let mut wa = vec![0.0; steps * ny];
    let sign = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
    for j in 0..steps {
        // τ = dt/2 + j dt belongs to step k = steps − 1 − j
        let k = steps - 1 - j;
        let phi_row = phi.row(row);
        for c in 0..nd {
            let v: f64 = (0..phi_row.len()).map(|i| phi_row[i] * plant.n1()[(i, c)]).sum();
            wd[k * nd + c] = sign(v);
        }
        for c in 0..ny {
            let v: f64 = (0..phi_row.len()).map(|i| phi_row[i] * neg_k[(i, c)]).sum();
            wa[k * ny + c] = sign(v);
        }
        phi = &phi * &step;
    }
    Ok((wd, wa))
}

/// Table quantiles `{0.9, 0.95, 0.99, 1}` of the ratios.
pub fn conservatism_quantiles(records: &[ConservatismRecord]) -> Option<Vec<f64>> {
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    quantiles(&ratios, &TABLE_QUANTILES)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DesignPoint {
    pub beta: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub epsilon_e: f64,
    pub epsilon_e_tilde: f64,
    pub nu_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoRecord {
    pub index: u64,
    pub kalman: Result<DesignPoint>,
    pub designs: Vec<Result<DesignPoint>>,
}

/// Bounds of the Kalman baseline and of one design per `β` on one system.
pub fn pareto_system(study: &StudyConfig, index: u64, betas: &[f64]) -> Result<ParetoRecord> {
    let plant = study.system(index)?;
    let d = DisturbanceSpec::infinity(study.epsilon_d)?;
    let kalman = design_kalman_uniform(&plant, study.epsilon_d).and_then(|k| {
        let r = analyze(&plant, &k, &d, None)?;
        Ok(DesignPoint {
            beta: 0.0,
            gamma: f64::NAN,
            gamma_tilde: f64::NAN,
            epsilon_e: r.epsilon_e,
            epsilon_e_tilde: r.epsilon_e_tilde,
            nu_max: r.nu_max,
        })
    });
    let sweep = crate::synthesis::pareto_sweep(&plant, betas, &study.solver)?;
    let designs = sweep
        .into_iter()
        .map(|res| {
            let s = res?;
            let r = analyze(&plant, &s.gain, &d, None)?;
            Ok(DesignPoint {
                beta: s.beta,
                gamma: s.gamma,
                gamma_tilde: s.gamma_tilde,
                epsilon_e: r.epsilon_e,
                epsilon_e_tilde: r.epsilon_e_tilde,
                nu_max: r.nu_max,
            })
        })
        .collect();
    Ok(ParetoRecord { index, kalman, designs })
}
