//! Closed-loop simulation of plant, observer and residual detector with
//! bounded disturbances, sensor attacks and a robust CBF safety filter.
//!
//! Each integration step holds `d`, `a` and `u` constant (zero-order hold)
//! and advances `z = (x, x̂)` with classical fourth-order Runge–Kutta. The
//! detector is evaluated at step boundaries.

mod attack;
pub mod experiments;
mod random;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use attack::{robust_cbf_filter, stealthy_deactivation_attack, FilterOutput, SafetyFilterConfig};
pub use random::{derive_seed, generate_random_system, RandomSystemSpec, DEFAULT_STABILITY_MARGIN};

use crate::analysis::{ObserverGain, Plant};
use crate::linalg::Matrix;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Seed of the disturbance generator.
    pub seed: u64,
    pub epsilon_d: f64,
    /// Detector threshold.
    pub nu: f64,
    pub x0: Vec<f64>,
    pub xhat0: Vec<f64>,
    pub attack_enabled: bool,
    pub attack_start: f64,
    /// Keep every k-th sample in a recorded trace (the final sample is
    /// always kept). Summaries always use every step.
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub record_every: usize,
}

#[cfg(feature = "serde")]
fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(epsilon_d: f64, nu: f64, x0: Vec<f64>, xhat0: Vec<f64>) -> Self {
        Self {
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            seed: 0,
            epsilon_d,
            nu,
            x0,
            xhat0,
            attack_enabled: false,
            attack_start: 0.0,
            record_every: 1,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self, n_states: usize) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step {} must be positive", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::InvalidInput(format!("horizon {} must be at least one step", self.t_end)));
        }
        if !(self.epsilon_d >= 0.0) || !self.epsilon_d.is_finite() {
            return Err(Error::InvalidInput("disturbance bound must be non-negative".into()));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidInput("detector threshold must be non-negative".into()));
        }
        if self.x0.len() != n_states || self.xhat0.len() != n_states {
            return Err(Error::Dimension(format!("initial states must have length {n_states}")));
        }
        if self.x0.iter().chain(&self.xhat0).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        if !self.attack_start.is_finite() {
            return Err(Error::NonFinite("attack start time"));
        }
        Ok(())
    }
}

/// Signal source evaluated once per step: `(t, x̂, out)`.
pub type Signal<'a> = Box<dyn FnMut(f64, &[f64], &mut [f64]) + 'a>;

/// Disturbance realisation.
pub enum Disturbance<'a> {
    Zero,
    /// i.i.d. uniform on `[−ε_d, ε_d]`, seeded from [`SimConfig::seed`].
    Uniform,
    Custom(Signal<'a>),
}

/// Attack realisation, used while `attack_enabled` and `t ≥ attack_start`.
pub enum Attack<'a> {
    /// [`stealthy_deactivation_attack`] against the configured safety filter.
    Deactivation,
    Custom(Signal<'a>),
}

/// Control input.
pub enum Input<'a> {
    Zero,
    Constant(Vec<f64>),
    SafetyFilter(&'a SafetyFilterConfig),
}

pub struct SimSetup<'a> {
    pub input: Input<'a>,
    pub disturbance: Disturbance<'a>,
    pub attack: Attack<'a>,
}

impl Default for SimSetup<'_> {
    fn default() -> Self {
        Self { input: Input::Zero, disturbance: Disturbance::Uniform, attack: Attack::Deactivation }
    }
}

/// One recorded sample: state at `t` and the inputs held over `[t, t + dt)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub e: Vec<f64>,
    pub r: Vec<f64>,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
    pub u: Vec<f64>,
    pub alarm: bool,
    pub h_x: Option<f64>,
    pub h_xhat: Option<f64>,
    pub constraint_active: bool,
}

/// Borrowed view of the current sample, handed to streaming observers.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'s> {
    pub step: usize,
    pub t: f64,
    pub x: &'s [f64],
    pub xhat: &'s [f64],
    pub r: &'s [f64],
    pub a: &'s [f64],
    pub d: &'s [f64],
    pub u: &'s [f64],
    pub alarm: bool,
    pub attack_active: bool,
    pub e_inf: f64,
    pub r_inf: f64,
    pub h_x: Option<f64>,
    pub h_xhat: Option<f64>,
    pub constraint_active: bool,
}

impl Sample<'_> {
    pub fn to_row(&self) -> TraceRow {
        TraceRow {
            t: self.t,
            x: self.x.to_vec(),
            xhat: self.xhat.to_vec(),
            e: self.x.iter().zip(self.xhat).map(|(a, b)| a - b).collect(),
            r: self.r.to_vec(),
            a: self.a.to_vec(),
            d: self.d.to_vec(),
            u: self.u.to_vec(),
            alarm: self.alarm,
            h_x: self.h_x,
            h_xhat: self.h_xhat,
            constraint_active: self.constraint_active,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimTrace {
    pub n_states: usize,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub n_disturbances: usize,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    fn for_plant(p: &Plant) -> Self {
        Self {
            n_states: p.n_states(),
            n_inputs: p.n_inputs(),
            n_outputs: p.n_outputs(),
            n_disturbances: p.n_disturbances(),
            rows: Vec::new(),
        }
    }

    /// Column names for tabular export, matching [`SimTrace::row_values`].
    pub fn column_names(&self) -> Vec<String> {
        let mut cols = vec![String::from("t")];
        let mut push = |prefix: &str, n: usize| {
            for i in 1..=n {
                cols.push(format!("{prefix}{i}"));
            }
        };
        push("x", self.n_states);
        push("xhat", self.n_states);
        push("e", self.n_states);
        push("r", self.n_outputs);
        push("a", self.n_outputs);
        push("d", self.n_disturbances);
        push("u", self.n_inputs);
        for c in ["alarm", "h_x", "h_xhat", "constraint_active"] {
            cols.push(c.into());
        }
        cols
    }

    /// Numeric row; flags become 0/1 and a missing `h` becomes NaN.
    pub fn row_values(row: &TraceRow) -> Vec<f64> {
        let mut v = vec![row.t];
        for part in [&row.x, &row.xhat, &row.e, &row.r, &row.a, &row.d, &row.u] {
            v.extend_from_slice(part);
        }
        v.push(if row.alarm { 1.0 } else { 0.0 });
        v.push(row.h_x.unwrap_or(f64::NAN));
        v.push(row.h_xhat.unwrap_or(f64::NAN));
        v.push(if row.constraint_active { 1.0 } else { 0.0 });
        v
    }

    pub fn min_h_x(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.h_x).reduce(f64::min)
    }
}

/// Whole-run statistics over every step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimSummary {
    pub samples: usize,
    pub alarms: usize,
    pub max_e_inf: f64,
    pub max_r_inf: f64,
    /// `+∞` when no safety filter is configured.
    pub min_h_x: f64,
    pub min_h_xhat: f64,
    pub final_x: Vec<f64>,
    pub final_xhat: Vec<f64>,
}

impl SimSummary {
    pub fn alarm_rate(&self) -> f64 {
        self.alarms as f64 / self.samples as f64
    }
}

/// Streams every sample of a run to `on_sample` and returns the summary.
pub fn run(
    plant: &Plant,
    gain: &ObserverGain,
    cfg: &SimConfig,
    setup: SimSetup<'_>,
    on_sample: &mut dyn FnMut(&Sample<'_>),
) -> Result<SimSummary> {
    let mut engine = Engine::new(plant, gain, cfg, setup)?;
    engine.run(on_sample)
}

/// Runs and records every `record_every`-th sample. On divergence the
/// error carries the trace recorded so far.
pub fn simulate(plant: &Plant, gain: &ObserverGain, cfg: &SimConfig, setup: SimSetup<'_>) -> Result<(SimTrace, SimSummary)> {
    let mut trace = SimTrace::for_plant(plant);
    let last = cfg.n_steps();
    let every = cfg.record_every.max(1);
    let outcome = run(plant, gain, cfg, setup, &mut |s| {
        if s.step % every == 0 || s.step == last {
            trace.rows.push(s.to_row());
        }
    });
    match outcome {
        Ok(summary) => Ok((trace, summary)),
        Err(Error::Divergence { time, .. }) => Err(Error::Divergence { time, trace: Box::new(trace) }),
        Err(e) => Err(e),
    }
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    plant: &'a Plant,
    gain: &'a ObserverGain,
    setup: SimSetup<'a>,
    /// `ż = F z + G w` with `z = (x, x̂)`; nominal and attacked variants.
    f_nominal: Matrix,
    f_attacked: Matrix,
    rng: ChaCha8Rng,
    uniform: Option<Uniform<f64>>,
}

impl<'a> Engine<'a> {
    fn new(plant: &'a Plant, gain: &'a ObserverGain, cfg: &'a SimConfig, setup: SimSetup<'a>) -> Result<Self> {
        cfg.validate(plant.n_states())?;
        let n = plant.n_states();
        if gain.k().shape() != (n, plant.n_outputs()) {
            return Err(Error::Dimension("observer gain does not match the plant".into()));
        }
        match &setup.input {
            Input::Constant(u) if u.len() != plant.n_inputs() => {
                return Err(Error::Dimension(format!("constant input must have length {}", plant.n_inputs())));
            }
            Input::SafetyFilter(f) => f.validate(plant)?,
            _ => {}
        }
        if cfg.attack_enabled && matches!(setup.attack, Attack::Deactivation) && !matches!(setup.input, Input::SafetyFilter(_)) {
            return Err(Error::InvalidInput("the deactivation attack needs a safety filter to target".into()));
        }
        let (a, c, k) = (plant.a(), plant.c(), gain.k());
        let kc = k * c;
        // nominal: x̂' = (A − KC) x̂ + KC x + ...
        let mut f_nominal = Matrix::zeros(2 * n, 2 * n);
        f_nominal.set_block(0, 0, a);
        f_nominal.set_block(n, 0, &kc);
        f_nominal.set_block(n, n, &(a - &kc));
        // attacked: x̂' = A x̂ + K a, decoupled from x
        let mut f_attacked = Matrix::zeros(2 * n, 2 * n);
        f_attacked.set_block(0, 0, a);
        f_attacked.set_block(n, n, a);
        let uniform = if cfg.epsilon_d > 0.0 {
            Some(Uniform::new_inclusive(-cfg.epsilon_d, cfg.epsilon_d).map_err(|_| Error::InvalidInput("disturbance range".into()))?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            plant,
            gain,
            setup,
            f_nominal,
            f_attacked,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            uniform,
        })
    }

    fn run(&mut self, on_sample: &mut dyn FnMut(&Sample<'_>)) -> Result<SimSummary> {
        let p = self.plant;
        let (n, nu_, ny, nd) = (p.n_states(), p.n_inputs(), p.n_outputs(), p.n_disturbances());
        let cfg = self.cfg;
        let steps = cfg.n_steps();
        let mut z = vec![0.0; 2 * n];
        z[..n].copy_from_slice(&cfg.x0);
        z[n..].copy_from_slice(&cfg.xhat0);
        let (mut d, mut a, mut u, mut r) = (vec![0.0; nd], vec![0.0; ny], vec![0.0; nu_], vec![0.0; ny]);
        let mut g = vec![0.0; 2 * n];
        let mut scratch = Rk4Scratch::new(2 * n);
        let mut summary = SimSummary {
            samples: 0,
            alarms: 0,
            max_e_inf: 0.0,
            max_r_inf: 0.0,
            min_h_x: f64::INFINITY,
            min_h_xhat: f64::INFINITY,
            final_x: Vec::new(),
            final_xhat: Vec::new(),
        };
        let filter = match &self.setup.input {
            Input::SafetyFilter(f) => Some(*f),
            _ => None,
        };
        for step in 0..=steps {
            let t = step as f64 * cfg.dt;
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { time: t, trace: Box::default() });
            }
            let (x, xhat) = z.split_at(n);

            match &mut self.setup.disturbance {
                Disturbance::Zero => d.fill(0.0),
                Disturbance::Uniform => match &self.uniform {
                    Some(dist) => d.iter_mut().for_each(|v| *v = dist.sample(&mut self.rng)),
                    None => d.fill(0.0),
                },
                Disturbance::Custom(f) => f(t, xhat, &mut d),
            }
            let attack_active = cfg.attack_enabled && t >= cfg.attack_start;
            if attack_active {
                match &mut self.setup.attack {
                    Attack::Deactivation => {
                        let f = filter.expect("checked at construction");
                        a.copy_from_slice(&stealthy_deactivation_attack(self.gain, f, cfg.nu));
                    }
                    Attack::Custom(f) => f(t, xhat, &mut a),
                }
            } else {
                a.fill(0.0);
            }
            let mut constraint_active = false;
            match &self.setup.input {
                Input::Zero => u.fill(0.0),
                Input::Constant(c) => u.copy_from_slice(c),
                Input::SafetyFilter(f) => {
                    let out = robust_cbf_filter(xhat, p, f)?;
                    constraint_active = out.active;
                    u.copy_from_slice(&out.u);
                }
            }

            // detector at the step boundary
            if attack_active {
                r.copy_from_slice(&a);
            } else {
                r.fill(0.0);
                for i in 0..ny {
                    let ci = p.c().row(i);
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += ci[j] * (x[j] - xhat[j]);
                    }
                    let n2i = p.n2().row(i);
                    for j in 0..nd {
                        acc += n2i[j] * d[j];
                    }
                    r[i] = acc;
                }
            }
            let r_inf = inf_norm(&r);
            let alarm = r_inf > cfg.nu;
            let e_inf = x.iter().zip(xhat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let h_x = filter.map(|f| f.h(x));
            let h_xhat = filter.map(|f| f.h(xhat));

            summary.samples += 1;
            summary.alarms += alarm as usize;
            summary.max_e_inf = summary.max_e_inf.max(e_inf);
            summary.max_r_inf = summary.max_r_inf.max(r_inf);
            if let (Some(hx), Some(hxh)) = (h_x, h_xhat) {
                summary.min_h_x = summary.min_h_x.min(hx);
                summary.min_h_xhat = summary.min_h_xhat.min(hxh);
            }
            on_sample(&Sample {
                step,
                t,
                x,
                xhat,
                r: &r,
                a: &a,
                d: &d,
                u: &u,
                alarm,
                attack_active,
                e_inf,
                r_inf,
                h_x,
                h_xhat,
                constraint_active,
            });
            if step == steps {
                summary.final_x = x.to_vec();
                summary.final_xhat = xhat.to_vec();
                break;
            }

            // constant forcing over the step
            let (gx, gxh) = g.split_at_mut(n);
            gx.fill(0.0);
            p.b().mul_vec_add(&u, gx);
            p.n1().mul_vec_add(&d, gx);
            gxh.fill(0.0);
            p.b().mul_vec_add(&u, gxh);
            let f = if attack_active {
                self.gain.k().mul_vec_add(&a, gxh);
                &self.f_attacked
            } else {
                // K N₂ d enters the observer through the innovation
                let kn2d = self.gain.k().mul_vec(&p.n2().mul_vec(&d));
                gxh.iter_mut().zip(&kn2d).for_each(|(g, v)| *g += v);
                &self.f_nominal
            };
            rk4_step(f, &g, &mut z, cfg.dt, &mut scratch);
        }
        Ok(summary)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Self { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }
}

/// One classical RK4 step of `ż = F z + g` with constant `g`.
fn rk4_step(f: &Matrix, g: &[f64], z: &mut [f64], h: f64, s: &mut Rk4Scratch) {
    let rhs = |state: &[f64], out: &mut [f64]| {
        out.copy_from_slice(g);
        f.mul_vec_add(state, out);
    };
    rhs(z, &mut s.k1);
    for i in 0..z.len() {
        s.tmp[i] = z[i] + 0.5 * h * s.k1[i];
    }
    rhs(&s.tmp, &mut s.k2);
    for i in 0..z.len() {
        s.tmp[i] = z[i] + 0.5 * h * s.k2[i];
    }
    rhs(&s.tmp, &mut s.k3);
    for i in 0..z.len() {
        s.tmp[i] = z[i] + h * s.k3[i];
    }
    rhs(&s.tmp, &mut s.k4);
    for i in 0..z.len() {
        z[i] += h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

/// i.i.d. uniform draws on `[−ε_d, ε_d]`; zeros when `ε_d = 0`.
pub fn sample_disturbance(rng: &mut impl rand::Rng, n_d: usize, epsilon_d: f64) -> Result<Vec<f64>> {
    if !(epsilon_d >= 0.0) || !epsilon_d.is_finite() {
        return Err(Error::InvalidInput(format!("disturbance bound {epsilon_d} must be non-negative")));
    }
    if epsilon_d == 0.0 {
        return Ok(vec![0.0; n_d]);
    }
    let dist = Uniform::new_inclusive(-epsilon_d, epsilon_d).map_err(|_| Error::InvalidInput("disturbance range".into()))?;
    Ok((0..n_d).map(|_| dist.sample(rng)).collect())
}
