//! The four workflows: `analyze`, `design`, `simulate` and `experiment`.

use std::path::{Path, PathBuf};

use peakguard_core::analysis::{analyze, build_channels, min_robust_threshold, BoundsReport, Plant};
use peakguard_core::linalg::eigenvalues;
use peakguard_core::peaknorm::{hinf_norm, LtiChannel};
use peakguard_core::sim::experiments::{
    conservatism_quantiles, conservatism_system, false_alarm_system, pareto_system, run_scenario, summarize_false_alarms,
    BoundChoice, ConservatismRecord, DesignPoint, FalseAlarmRecord, IllustrativeRun, ObserverKind, ParetoRecord,
    TABLE_QUANTILES,
};
use peakguard_core::sim::{SimConfig, SimSummary, SimTrace};
use peakguard_core::synthesis::{design_attack_aware, SynthesisResult};
use peakguard_core::{Error, Matrix};
use serde::Serialize;

use crate::batch::run_indexed;
use crate::config::{check_beta, BoundSpec, DesignConfig, ExperimentConfig, ExperimentKind, ProjectConfig, SimulationConfig};
use crate::metadata::RunMetadata;
use crate::output::{write_json, Cell, Table};
use crate::svg::{Element, Figure, PALETTE};
use crate::{CliError, Outcome};

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub betas: Option<Vec<f64>>,
    pub jobs: Option<usize>,
}

/// Applies the overrides. A `--beta` list becomes the design sweep, the
/// Pareto sweep of a Pareto experiment, or (single value) the weight of the
/// other experiments.
pub fn effective_config(mut cfg: ProjectConfig, ov: &Overrides) -> Result<ProjectConfig, CliError> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.output_dir = out.clone();
    }
    if let Some(betas) = &ov.betas {
        if betas.is_empty() {
            return Err(CliError::Config("--beta needs at least one value".into()));
        }
        betas.iter().try_for_each(|b| check_beta(*b))?;
        cfg.design = Some(DesignConfig { betas: betas.clone() });
        if let Some(e) = cfg.experiment.as_mut() {
            if e.kind == ExperimentKind::Pareto {
                e.betas = betas.clone();
            } else if let [beta] = betas[..] {
                e.beta = beta;
            } else {
                return Err(CliError::Config("this experiment takes a single --beta value".into()));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(cfg: &ProjectConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Serialize)]
pub struct AnalysisOutput {
    pub gain: Matrix,
    pub report: BoundsReport,
    /// Largest threshold with a robust verdict, `null` if none exists.
    pub min_robust_threshold: Option<f64>,
    pub verdict: String,
}

pub fn verdict_text(report: &BoundsReport) -> String {
    if !report.hurwitz_a {
        let kind = if report.marginal_a { "marginally stable" } else { "unstable" };
        return format!(
            "NOT attack-robust: A is not Hurwitz ({kind}, spectral abscissa {:.6}), so the attacked error is unbounded",
            report.spectral_abscissa_a
        );
    }
    let rel = if report.attack_robust { "<=" } else { ">" };
    format!(
        "{}: eps_e_tilde = {:.6} {rel} eps_e = {:.6} at nu = {:.6} (nu_max = {:.6})",
        if report.attack_robust { "attack-robust" } else { "NOT attack-robust" },
        report.epsilon_e_tilde,
        report.epsilon_e,
        report.nu_used,
        report.nu_max
    )
}

pub fn cmd_analyze(cfg: &ProjectConfig) -> Result<Outcome, CliError> {
    let plant = cfg.plant()?;
    let gain = cfg.gain(&plant)?;
    let report = analyze(&plant, &gain, &cfg.disturbance_spec()?, cfg.detector.nu.value())?;
    let verdict = verdict_text(&report);
    let output = AnalysisOutput {
        gain: gain.k().clone(),
        min_robust_threshold: min_robust_threshold(&report),
        verdict: verdict.clone(),
        report,
    };
    write_json(&out_path(cfg, "report.json"), &RunMetadata::new("analyze", cfg), &output)?;
    println!("{verdict}");
    println!(
        "norms: g_ed {:.6}  g_etilde_d {:.6}  g_etilde_a {:.6}  g_rd {:.6}",
        output.report.norm_ged.value,
        output.report.norm_getilde_d.value,
        output.report.norm_getilde_a.value,
        output.report.norm_grd.value
    );
    Ok(if output.report.attack_robust { Outcome::Success } else { Outcome::NotRobust })
}

// ----------------------------------------------------------------- design

/// Independent check of a synthesis result.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub hinf_nominal: f64,
    pub hinf_attacked: f64,
    pub gamma_holds: bool,
    pub gamma_tilde_holds: bool,
    pub observer_abscissa: f64,
}

pub const CERTIFICATE_REL_TOL: f64 = 1e-6;

/// H∞ norms of `(A − KC, N₁ − KN₂, I, 0)` and `(A, [N₁, −K], I, 0)` against
/// `γ`, `γ̃`.
pub fn certify(plant: &Plant, s: &SynthesisResult) -> Result<Certificate, CliError> {
    let ch = build_channels(plant, &s.gain)?;
    let attacked = LtiChannel::strictly_proper(
        plant.a().clone(),
        Matrix::hstack(&[plant.n1(), &s.k().scale(-1.0)])?,
        Matrix::identity(plant.n_states()),
    )?;
    let hinf_nominal = hinf_norm(&ch.ed, 1e-9)?;
    let hinf_attacked = hinf_norm(&attacked, 1e-9)?;
    Ok(Certificate {
        hinf_nominal,
        hinf_attacked,
        gamma_holds: hinf_nominal <= s.gamma * (1.0 + CERTIFICATE_REL_TOL),
        gamma_tilde_holds: hinf_attacked <= s.gamma_tilde * (1.0 + CERTIFICATE_REL_TOL),
        observer_abscissa: eigenvalues(ch.ed.a())?.spectral_abscissa,
    })
}

#[derive(Debug, Serialize)]
pub struct DesignEntry {
    pub synthesis: SynthesisResult,
    pub certificate: Certificate,
    pub epsilon_e: f64,
    pub epsilon_e_tilde: f64,
    pub nu_max: f64,
}

fn design_betas(cfg: &ProjectConfig) -> Result<Vec<f64>, CliError> {
    if let Some(d) = &cfg.design {
        return Ok(d.betas.clone());
    }
    match cfg.observer {
        crate::config::ObserverChoice::Designed { beta } => Ok(vec![beta]),
        _ => Err(CliError::Config("design needs `design.betas`, a designed observer or --beta".into())),
    }
}

pub fn cmd_design(cfg: &ProjectConfig) -> Result<Outcome, CliError> {
    let plant = cfg.plant()?;
    let betas = design_betas(cfg)?;
    let d = cfg.disturbance_spec()?;
    let meta = RunMetadata::new("design", cfg);
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut table = Table::new(["beta", "gamma", "gamma_tilde", "epsilon_e", "epsilon_e_tilde", "nu_max", "certified", "failure"]);
    for &beta in &betas {
        let outcome = design_attack_aware(&plant, beta, &cfg.solver).map_err(CliError::from).and_then(|s| {
            let certificate = certify(&plant, &s)?;
            let report = analyze(&plant, &s.gain, &d, None)?;
            Ok(DesignEntry {
                certificate,
                epsilon_e: report.epsilon_e,
                epsilon_e_tilde: report.epsilon_e_tilde,
                nu_max: report.nu_max,
                synthesis: s,
            })
        });
        match outcome {
            Ok(e) => {
                let ok = e.certificate.gamma_holds && e.certificate.gamma_tilde_holds && e.certificate.observer_abscissa < 0.0;
                table.push(vec![
                    beta.into(),
                    e.synthesis.gamma.into(),
                    e.synthesis.gamma_tilde.into(),
                    e.epsilon_e.into(),
                    e.epsilon_e_tilde.into(),
                    e.nu_max.into(),
                    ok.into(),
                    "".into(),
                ]);
                log::info!("beta = {beta}: gamma = {:.6}, gamma_tilde = {:.6}", e.synthesis.gamma, e.synthesis.gamma_tilde);
                entries.push(e);
            }
            Err(err) => {
                let nan = f64::NAN;
                table.push(vec![beta.into(), nan.into(), nan.into(), nan.into(), nan.into(), nan.into(), false.into(), err.to_string().into()]);
                failures.push(format!("beta = {beta}: {err}"));
            }
        }
    }
    write_json(&out_path(cfg, "design.json"), &meta, &entries)?;
    table.write(&out_path(cfg, "pareto.csv"), &meta)?;
    for e in &entries {
        println!(
            "beta = {}: gamma = {:.6}, gamma_tilde = {:.6}, eps_e = {:.6}, eps_e_tilde = {:.6}",
            e.synthesis.beta, e.synthesis.gamma, e.synthesis.gamma_tilde, e.epsilon_e, e.epsilon_e_tilde
        );
    }
    if failures.is_empty() {
        Ok(Outcome::Success)
    } else {
        Err(CliError::Failed(format!("synthesis failed: {}", failures.join("; "))))
    }
}

// --------------------------------------------------------------- simulate

#[derive(Debug, Serialize)]
pub struct SimulationOutput {
    pub nu: f64,
    pub epsilon_e: f64,
    pub epsilon_e_tilde: f64,
    pub bound_m: Option<f64>,
    pub nominal: SimSummary,
    pub attacked: Option<SimSummary>,
}

fn trace_table(trace: &SimTrace) -> Table {
    let mut t = Table::new(trace.column_names());
    let n = trace.n_states;
    let flags = [3 * n + 2 * trace.n_outputs + trace.n_disturbances + trace.n_inputs + 1];
    for row in &trace.rows {
        let values = SimTrace::row_values(row);
        let last = values.len() - 1;
        t.push(
            values
                .into_iter()
                .enumerate()
                .map(|(i, v)| if flags.contains(&i) || i == last { Cell::Int(v as u64) } else { Cell::Num(v) })
                .collect(),
        );
    }
    t
}

fn sim_config(cfg: &ProjectConfig, sim: &SimulationConfig, n: usize, nu: f64) -> SimConfig {
    let x0 = sim.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    let xhat0 = sim.xhat0.clone().unwrap_or_else(|| x0.clone());
    let mut c = SimConfig::new(cfg.disturbance.epsilon_d, nu, x0, xhat0);
    c.dt = sim.dt;
    c.t_end = sim.t_end;
    c.seed = cfg.seed;
    c.attack_enabled = sim.attack;
    c.attack_start = sim.attack_start;
    c.record_every = sim.record_every;
    c
}

pub fn cmd_simulate(cfg: &ProjectConfig) -> Result<Outcome, CliError> {
    let plant = cfg.plant()?;
    let gain = cfg.gain(&plant)?;
    let report = analyze(&plant, &gain, &cfg.disturbance_spec()?, cfg.detector.nu.value())?;
    let sim = cfg.simulation.clone().ok_or_else(|| CliError::Config("simulate needs a `simulation` entry".into()))?;
    let bound_m = sim.safety_filter.as_ref().map(|f| match f.bound {
        BoundSpec::Choice(BoundChoice::Nominal) => report.epsilon_e,
        BoundSpec::Choice(BoundChoice::Attacked) => report.epsilon_e_tilde,
        BoundSpec::Value(m) => m,
    });
    if let Some(m) = bound_m {
        if !m.is_finite() {
            return Err(CliError::Failed(format!("error bound M = {m} is not finite; the attacked error is unbounded")));
        }
    }
    let filter = sim.safety_filter.as_ref().zip(bound_m).map(|(f, m)| f.build(m));
    let sc = sim_config(cfg, &sim, plant.n_states(), report.nu_used);
    let meta = RunMetadata::new("simulate", cfg);
    let (nominal, attacked) = match run_scenario(&plant, &gain, &sc, filter.as_ref()) {
        Ok(runs) => runs,
        Err(Error::Divergence { time, trace }) => {
            trace_table(&trace).write(&out_path(cfg, "diverged.csv"), &meta)?;
            return Err(CliError::Failed(format!("simulation diverged at t = {time}; partial trace written to diverged.csv")));
        }
        Err(e) => return Err(e.into()),
    };
    trace_table(&nominal.trace).write(&out_path(cfg, "nominal.csv"), &meta)?;
    if let Some(a) = &attacked {
        trace_table(&a.trace).write(&out_path(cfg, "attacked.csv"), &meta)?;
    }
    let svg = trajectory_figure(&nominal, attacked.as_ref(), filter.as_ref(), &meta.config_hash).render();
    crate::output::write_bytes(&out_path(cfg, "trajectory.svg"), svg.as_bytes())?;
    let output = SimulationOutput {
        nu: report.nu_used,
        epsilon_e: report.epsilon_e,
        epsilon_e_tilde: report.epsilon_e_tilde,
        bound_m,
        nominal: nominal.summary.clone(),
        attacked: attacked.as_ref().map(|a| a.summary.clone()),
    };
    write_json(&out_path(cfg, "summary.json"), &meta, &output)?;
    let describe = |name: &str, s: &SimSummary| {
        let h = if s.min_h_x.is_finite() { format!(", min h(x) = {:.6}", s.min_h_x) } else { String::new() };
        println!("{name}: alarms = {}/{}, max |e| = {:.6}{h}", s.alarms, s.samples, s.max_e_inf);
    };
    describe("nominal", &nominal.summary);
    if let Some(a) = &attacked {
        describe("attacked", &a.summary);
    }
    Ok(Outcome::Success)
}

/// State-plane trajectories with the safe-set boundary `h(x) = 0` (solid) and
/// the robust margin `h(x) = L_h M` (dotted); time series for scalar plants.
pub fn trajectory_figure(
    nominal: &IllustrativeRun,
    attacked: Option<&IllustrativeRun>,
    filter: Option<&peakguard_core::sim::SafetyFilterConfig>,
    hash: &str,
) -> Figure {
    let planar = nominal.trace.n_states >= 2;
    let mut fig = if planar {
        Figure::new("State trajectories", "x1", "x2")
    } else {
        Figure::new("State trajectories", "t", "x1")
    };
    fig = fig.with_hash(hash);
    let points = |t: &SimTrace| -> Vec<(f64, f64)> {
        t.rows.iter().map(|r| if planar { (r.x[0], r.x[1]) } else { (r.t, r.x[0]) }).collect()
    };
    fig.push(Element::Polyline { points: points(&nominal.trace), color: PALETTE[0].into(), dash: None, label: Some("nominal".into()) });
    if let Some(a) = attacked {
        fig.push(Element::Polyline { points: points(&a.trace), color: PALETTE[1].into(), dash: None, label: Some("attacked".into()) });
    }
    if let (Some(f), true) = (filter, planar && nominal.trace.n_states == 2) {
        let normal = (f.h_gradient[0], f.h_gradient[1]);
        fig.push(Element::Line { normal, offset: f.h_offset, color: "black".into(), dash: None, label: Some("h(x) = 0".into()) });
        fig.push(Element::Line {
            normal,
            offset: f.h_offset - f.lipschitz_lh * f.error_bound_m,
            color: "black".into(),
            dash: Some("2 3".into()),
            label: Some("h(x) = L_h M".into()),
        });
    }
    fig
}

// ------------------------------------------------------------- experiment

#[derive(Debug, Serialize)]
struct ExperimentSummary {
    kind: ExperimentKind,
    n_systems: usize,
    failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantiles: Option<Vec<(f64, f64)>>,
}

pub fn cmd_experiment(cfg: &ProjectConfig, jobs: Option<usize>) -> Result<Outcome, CliError> {
    let exp = cfg.experiment.clone().ok_or_else(|| CliError::Config("experiment needs an `experiment` entry".into()))?;
    let meta = RunMetadata::new("experiment", cfg);
    let summary = match exp.kind {
        ExperimentKind::FalseAlarm => false_alarm_experiment(cfg, &exp, jobs, &meta)?,
        ExperimentKind::Conservatism => conservatism_experiment(cfg, &exp, jobs, &meta)?,
        ExperimentKind::Pareto => pareto_experiment(cfg, &exp, jobs, &meta)?,
    };
    write_json(&out_path(cfg, "experiment.json"), &meta, &summary)?;
    if summary.failures == summary.n_systems {
        return Err(CliError::Failed(format!("all {} systems failed", summary.n_systems)));
    }
    if summary.failures > 0 {
        log::warn!("{} of {} systems failed; see the failure column", summary.failures, summary.n_systems);
    }
    Ok(Outcome::Success)
}

fn fraction_label(f: f64) -> String {
    format!("rate_{}", crate::output::format_float(f))
}

fn false_alarm_experiment(
    cfg: &ProjectConfig,
    exp: &ExperimentConfig,
    jobs: Option<usize>,
    meta: &RunMetadata,
) -> Result<ExperimentSummary, CliError> {
    let study = exp.study(cfg.seed, cfg.disturbance.epsilon_d, &cfg.solver);
    let observers = [ObserverKind::Kalman, ObserverKind::Designed { beta: exp.beta }];
    let fr = &exp.fractions;
    let mut header: Vec<String> = ["index", "observer", "nu_max", "nu_reference", "samples"].map(String::from).to_vec();
    header.extend(fr.iter().map(|f| fraction_label(*f)));
    header.push("failure".into());
    let mut table = Table::new(header);
    let mut stats = Table::new(["observer", "fraction", "median", "q05", "q95", "systems"]);
    let mut fig = Figure::new("Empirical false-alarm rate", "nu / nu_max", "false-alarm rate").with_hash(&meta.config_hash);
    let mut failures = 0;
    for (o, observer) in observers.iter().enumerate() {
        let results = run_indexed(exp.n_systems, jobs, |i| false_alarm_system(&study, i, *observer, fr))?;
        let mut ok: Vec<FalseAlarmRecord> = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            let mut row: Vec<Cell> = vec![i.into(), observer.label().into()];
            match r {
                Ok(rec) => {
                    row.extend([rec.nu_max.into(), rec.nu_reference.into(), rec.samples.into()]);
                    row.extend(rec.rates.iter().map(|v| Cell::Num(*v)));
                    row.push("".into());
                    ok.push(rec);
                }
                Err(e) => {
                    failures += 1;
                    row.extend([f64::NAN.into(), f64::NAN.into(), 0usize.into()]);
                    row.extend(fr.iter().map(|_| Cell::Num(f64::NAN)));
                    row.push(e.to_string().into());
                }
            }
            table.push(row);
        }
        let summaries = summarize_false_alarms(&ok, fr);
        for s in &summaries {
            stats.push(vec![observer.label().into(), s.fraction.into(), s.median.into(), s.q05.into(), s.q95.into(), ok.len().into()]);
        }
        let color = PALETTE[o % PALETTE.len()];
        fig.push(Element::Band {
            x: summaries.iter().map(|s| s.fraction).collect(),
            lo: summaries.iter().map(|s| s.q05).collect(),
            hi: summaries.iter().map(|s| s.q95).collect(),
            color: color.into(),
            label: None,
        });
        fig.push(Element::Polyline {
            points: summaries.iter().map(|s| (s.fraction, s.median)).collect(),
            color: color.into(),
            dash: None,
            label: Some(format!("{} median", observer.label())),
        });
    }
    table.write(&out_path(cfg, "false_alarm.csv"), meta)?;
    stats.write(&out_path(cfg, "false_alarm_summary.csv"), meta)?;
    crate::output::write_bytes(&out_path(cfg, "false_alarm.svg"), fig.render().as_bytes())?;
    Ok(ExperimentSummary { kind: exp.kind, n_systems: exp.n_systems * observers.len(), failures, quantiles: None })
}

fn conservatism_experiment(
    cfg: &ProjectConfig,
    exp: &ExperimentConfig,
    jobs: Option<usize>,
    meta: &RunMetadata,
) -> Result<ExperimentSummary, CliError> {
    let study = exp.study(cfg.seed, cfg.disturbance.epsilon_d, &cfg.solver);
    let observer = ObserverKind::Designed { beta: exp.beta };
    let results = run_indexed(exp.n_systems, jobs, |i| conservatism_system(&study, i, observer, exp.mode))?;
    let mut table = Table::new([
        "index",
        "epsilon_e",
        "epsilon_e_tilde",
        "epsilon_e_tilde_certified",
        "empirical_peak",
        "horizon",
        "alarms",
        "ratio",
        "failure",
    ]);
    let mut ok: Vec<ConservatismRecord> = Vec::new();
    let mut failures = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => {
                table.push(vec![
                    i.into(),
                    c.epsilon_e.into(),
                    c.epsilon_e_tilde.into(),
                    c.epsilon_e_tilde_certified.into(),
                    c.empirical_peak.into(),
                    c.horizon.into(),
                    c.alarms.into(),
                    c.ratio.into(),
                    "".into(),
                ]);
                ok.push(c);
            }
            Err(e) => {
                failures += 1;
                let mut row: Vec<Cell> = vec![i.into()];
                row.extend((0..5).map(|_| Cell::Num(f64::NAN)));
                row.push(0usize.into());
                row.push(f64::NAN.into());
                row.push(e.to_string().into());
                table.push(row);
            }
        }
    }
    table.write(&out_path(cfg, "conservatism.csv"), meta)?;
    let q = conservatism_quantiles(&ok);
    let mut qt = Table::new(TABLE_QUANTILES.iter().map(|p| format!("{p}")));
    if let Some(q) = &q {
        qt.push(q.iter().map(|v| Cell::Num(*v)).collect());
    }
    qt.write(&out_path(cfg, "conservatism_quantiles.csv"), meta)?;

    let mut ratios: Vec<f64> = ok.iter().map(|c| c.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len().max(1) as f64;
    let mut fig = Figure::new("Conservatism of the attacked bound", "ratio eps_e_tilde / sup |e_tilde|", "fraction of systems")
        .with_hash(&meta.config_hash);
    fig.push(Element::Polyline {
        points: ratios.iter().enumerate().map(|(i, r)| (*r, (i + 1) as f64 / n)).collect(),
        color: PALETTE[0].into(),
        dash: None,
        label: Some("empirical CDF".into()),
    });
    fig.push(Element::Line { normal: (1.0, 0.0), offset: -1.0, color: "black".into(), dash: Some("2 3".into()), label: Some("ratio = 1".into()) });
    crate::output::write_bytes(&out_path(cfg, "conservatism.svg"), fig.render().as_bytes())?;
    if let Some(q) = &q {
        println!("ratio quantiles {:?}: {:?}", TABLE_QUANTILES, q);
    }
    Ok(ExperimentSummary {
        kind: exp.kind,
        n_systems: exp.n_systems,
        failures,
        quantiles: q.map(|q| TABLE_QUANTILES.iter().copied().zip(q).collect()),
    })
}

fn pareto_experiment(
    cfg: &ProjectConfig,
    exp: &ExperimentConfig,
    jobs: Option<usize>,
    meta: &RunMetadata,
) -> Result<ExperimentSummary, CliError> {
    let study = exp.study(cfg.seed, cfg.disturbance.epsilon_d, &cfg.solver);
    let results = run_indexed(exp.n_systems, jobs, |i| pareto_system(&study, i, &exp.betas))?;
    let mut table = Table::new(["index", "observer", "beta", "gamma", "gamma_tilde", "epsilon_e", "epsilon_e_tilde", "nu_max", "failure"]);
    let mut failures = 0;
    let mut kalman_pts = Vec::new();
    let mut design_pts: Vec<Vec<(f64, f64)>> = vec![Vec::new(); exp.betas.len()];
    let point_row = |i: usize, label: &str, beta: f64, p: &Result<DesignPoint, Error>| -> Vec<Cell> {
        match p {
            Ok(p) => vec![
                i.into(),
                label.into(),
                p.beta.into(),
                p.gamma.into(),
                p.gamma_tilde.into(),
                p.epsilon_e.into(),
                p.epsilon_e_tilde.into(),
                p.nu_max.into(),
                "".into(),
            ],
            Err(e) => {
                let mut row: Vec<Cell> = vec![i.into(), label.into(), beta.into()];
                row.extend((0..5).map(|_| Cell::Num(f64::NAN)));
                row.push(e.to_string().into());
                row
            }
        }
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(ParetoRecord { kalman, designs, .. }) => {
                failures += kalman.is_err() as usize + designs.iter().filter(|d| d.is_err()).count();
                table.push(point_row(i, "kalman", 0.0, &kalman));
                if let Ok(p) = &kalman {
                    kalman_pts.push((p.epsilon_e, p.epsilon_e_tilde));
                }
                for (j, d) in designs.iter().enumerate() {
                    table.push(point_row(i, "designed", exp.betas[j], d));
                    if let Ok(p) = d {
                        design_pts[j].push((p.epsilon_e, p.epsilon_e_tilde));
                    }
                }
            }
            Err(e) => {
                failures += 1 + exp.betas.len();
                table.push(point_row(i, "kalman", 0.0, &Err(e)));
            }
        }
    }
    table.write(&out_path(cfg, "pareto.csv"), meta)?;
    let mut fig = Figure::new("Error bounds per system", "eps_e", "eps_e_tilde").with_hash(&meta.config_hash);
    fig.push(Element::Scatter { points: kalman_pts, color: "black".into(), label: Some("Kalman".into()) });
    for (j, pts) in design_pts.into_iter().enumerate() {
        fig.push(Element::Scatter {
            points: pts,
            color: PALETTE[j % PALETTE.len()].into(),
            label: Some(format!("designed, beta = {}", exp.betas[j])),
        });
    }
    crate::output::write_bytes(&out_path(cfg, "pareto.svg"), fig.render().as_bytes())?;
    Ok(ExperimentSummary {
        kind: exp.kind,
        n_systems: exp.n_systems * (1 + exp.betas.len()),
        failures,
        quantiles: None,
    })
}

/// Loads, applies overrides and dispatches.
pub fn run_command(name: &str, config: &Path, ov: &Overrides) -> Result<Outcome, CliError> {
    let cfg = effective_config(ProjectConfig::load(config)?, ov)?;
    log::debug!("config hash {}", cfg.hash());
    match name {
        "analyze" => cmd_analyze(&cfg),
        "design" => cmd_design(&cfg),
        "simulate" => cmd_simulate(&cfg),
        "experiment" => cmd_experiment(&cfg, ov.jobs),
        other => Err(CliError::Config(format!("unknown command {other}"))),
    }
}
