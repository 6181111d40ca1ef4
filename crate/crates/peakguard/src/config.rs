//! JSON project configuration.

use std::path::{Path, PathBuf};

use peakguard_core::analysis::{DisturbanceSpec, ObserverGain, Plant};
use peakguard_core::peaknorm::NormKind;
use peakguard_core::sim::experiments::{illustrative_plant, BoundChoice, ConservatismMode, StudyConfig};
use peakguard_core::sim::{generate_random_system, RandomSystemSpec, SafetyFilterConfig, DEFAULT_DT, DEFAULT_T_END};
use peakguard_core::synthesis::{design_attack_aware, design_kalman_uniform, SolverOptions};
use peakguard_core::Matrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    /// Master seed for every random draw of a run.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plant: Option<PlantSource>,
    #[serde(default)]
    pub observer: ObserverChoice,
    #[serde(default)]
    pub disturbance: DisturbanceConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub design: Option<DesignConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// `{"matrices": {...}}`, `{"random": {...}}` or `"illustrative"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantSource {
    Matrices(Plant),
    Random(RandomSystemSpec),
    Illustrative,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObserverChoice {
    /// Steady-state Kalman gain for the uniform-noise covariances.
    #[default]
    Kalman,
    Designed {
        beta: f64,
    },
    Explicit {
        k: Matrix,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    pub epsilon_d: f64,
    #[serde(default)]
    pub q: NormKind,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self { epsilon_d: 0.5, q: NormKind::Infinity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default)]
    pub nu: Threshold,
}

/// A numeric threshold or `"auto"` for `ν_max`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    #[default]
    #[serde(with = "auto_keyword")]
    Auto,
}

mod auto_keyword {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(de::Error::custom(format!("expected a number or \"auto\", found {s:?}")))
        }
    }
}

impl Threshold {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Threshold::Value(v) => Some(v),
            Threshold::Auto => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Defaults to the origin.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Defaults to `x0`.
    #[serde(default)]
    pub xhat0: Option<Vec<f64>>,
    #[serde(default)]
    pub attack: bool,
    #[serde(default)]
    pub attack_start: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub safety_filter: Option<FilterConfig>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_t_end() -> f64 {
    DEFAULT_T_END
}

fn default_record_every() -> usize {
    10
}

/// Affine barrier `h(x) = ∇hᵀx + offset` and the error bound `M` the filter
/// is robustified against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub h_gradient: Vec<f64>,
    #[serde(default)]
    pub h_offset: f64,
    #[serde(default = "one")]
    pub alpha_gain: f64,
    pub u_des: Vec<f64>,
    pub bound: BoundSpec,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundSpec {
    /// `"nominal"` (`M = ε_e`) or `"attacked"` (`M = ε_ẽ`).
    Choice(BoundChoice),
    Value(f64),
}

impl FilterConfig {
    pub fn build(&self, bound_m: f64) -> SafetyFilterConfig {
        SafetyFilterConfig::new(self.h_gradient.clone(), self.h_offset, self.alpha_gain, bound_m, self.u_des.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Pareto,
    Conservatism,
    FalseAlarm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_systems: usize,
    #[serde(default = "two")]
    pub n_x: usize,
    #[serde(default = "two")]
    pub n_u: usize,
    #[serde(default = "two")]
    pub n_y: usize,
    #[serde(default = "default_margin")]
    pub stability_margin: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Design weight of the attack-aware observer.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Pareto sweep weights.
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Threshold fractions of the false-alarm study.
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub mode: ConservatismMode,
}

fn two() -> usize {
    2
}

fn default_margin() -> f64 {
    peakguard_core::sim::DEFAULT_STABILITY_MARGIN
}

fn default_beta() -> f64 {
    100.0
}

fn default_betas() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}

fn default_fractions() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

impl ExperimentConfig {
    pub fn study(&self, seed: u64, epsilon_d: f64, solver: &SolverOptions) -> StudyConfig {
        StudyConfig {
            master_seed: seed,
            n_x: self.n_x,
            n_u: self.n_u,
            n_y: self.n_y,
            stability_margin: self.stability_margin,
            epsilon_d,
            dt: self.dt,
            t_end: self.t_end,
            solver: *solver,
        }
    }
}

impl ProjectConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ProjectConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.disturbance.epsilon_d > 0.0) || !self.disturbance.epsilon_d.is_finite() {
            return bad(format!("disturbance.epsilon_d = {} must be positive", self.disturbance.epsilon_d));
        }
        if let ObserverChoice::Designed { beta } = self.observer {
            check_beta(beta)?;
        }
        if let Some(d) = &self.design {
            if d.betas.is_empty() {
                return bad("design.betas must not be empty".into());
            }
            d.betas.iter().try_for_each(|b| check_beta(*b))?;
        }
        if let Threshold::Value(nu) = self.detector.nu {
            if !(nu > 0.0) || !nu.is_finite() {
                return bad(format!("detector.nu = {nu} must be positive"));
            }
        }
        if let Some(e) = &self.experiment {
            if e.n_systems == 0 {
                return bad("experiment.n_systems must be at least 1".into());
            }
            check_beta(e.beta)?;
            e.betas.iter().try_for_each(|b| check_beta(*b))?;
            if e.fractions.is_empty() || e.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                return bad("experiment.fractions must be non-empty and lie in (0, 1]".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialisation. The output directory is
    /// left out so results moved elsewhere keep their hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = default_output_dir();
        let canonical = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn plant(&self) -> Result<Plant, CliError> {
        match &self.plant {
            None => Err(CliError::Config("this command needs a `plant` entry".into())),
            Some(PlantSource::Matrices(p)) => Ok(p.clone()),
            Some(PlantSource::Random(spec)) => Ok(generate_random_system(spec)?),
            Some(PlantSource::Illustrative) => Ok(illustrative_plant()),
        }
    }

    pub fn disturbance_spec(&self) -> Result<DisturbanceSpec, CliError> {
        Ok(DisturbanceSpec::new(self.disturbance.epsilon_d, self.disturbance.q)?)
    }

    pub fn gain(&self, plant: &Plant) -> Result<ObserverGain, CliError> {
        match &self.observer {
            ObserverChoice::Kalman => Ok(design_kalman_uniform(plant, self.disturbance.epsilon_d)?),
            ObserverChoice::Designed { beta } => Ok(design_attack_aware(plant, *beta, &self.solver)?.gain),
            ObserverChoice::Explicit { k } => {
                if k.shape() != (plant.n_states(), plant.n_outputs()) {
                    return Err(CliError::Config(format!(
                        "observer.k is {}x{}, expected {}x{}",
                        k.nrows(),
                        k.ncols(),
                        plant.n_states(),
                        plant.n_outputs()
                    )));
                }
                Ok(ObserverGain::new(k.clone()))
            }
        }
    }
}

pub fn check_beta(beta: f64) -> Result<(), CliError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("beta = {beta} must be a positive weight")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ProjectConfig::from_json(r#"{"plant": "illustrative"}"#).unwrap();
        assert_eq!(cfg.observer, ObserverChoice::Kalman);
        assert_eq!(cfg.detector.nu, Threshold::Auto);
        assert_eq!(cfg.disturbance.epsilon_d, 0.5);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ProjectConfig::from_json(r#"{"plant": "illustrative", "colour": 1}"#).is_err());
        assert!(ProjectConfig::from_json(r#"{"disturbance": {"epsilon_d": 1, "p": 2}}"#).is_err());
        assert!(ProjectConfig::from_json(r#"{"observer": {"kind": "designed", "beta": 1, "x": 0}}"#).is_err());
    }

    #[test]
    fn threshold_accepts_number_or_auto() {
        let cfg = ProjectConfig::from_json(r#"{"detector": {"nu": 1.5}}"#).unwrap();
        assert_eq!(cfg.detector.nu, Threshold::Value(1.5));
        let cfg = ProjectConfig::from_json(r#"{"detector": {"nu": "auto"}}"#).unwrap();
        assert_eq!(cfg.detector.nu, Threshold::Auto);
        assert!(ProjectConfig::from_json(r#"{"detector": {"nu": "max"}}"#).is_err());
        assert!(ProjectConfig::from_json(r#"{"detector": {"nu": -1}}"#).is_err());
    }

    #[test]
    fn non_positive_beta_is_rejected() {
        assert!(ProjectConfig::from_json(r#"{"observer": {"kind": "designed", "beta": 0}}"#).is_err());
        assert!(ProjectConfig::from_json(r#"{"design": {"betas": [1, -2]}}"#).is_err());
    }

    #[test]
    fn matrix_plant_round_trips_and_hash_is_stable() {
        let text = r#"{
            "plant": {"matrices": {"a": [[-1]], "b": [[1]], "c": [[1]], "n1": [[1, 0]], "n2": [[0, 1]]}},
            "observer": {"kind": "explicit", "k": [[0.5]]}
        }"#;
        let cfg = ProjectConfig::from_json(text).unwrap();
        let again = ProjectConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn inconsistent_plant_shapes_are_rejected() {
        let text = r#"{"plant": {"matrices": {"a": [[-1]], "b": [[1]], "c": [[1, 2]], "n1": [[1]], "n2": [[0]]}}}"#;
        assert!(ProjectConfig::from_json(text).is_err());
    }

    #[test]
    fn filter_bound_forms() {
        let f: FilterConfig =
            serde_json::from_str(r#"{"h_gradient": [-1, -1], "u_des": [1], "bound": "attacked"}"#).unwrap();
        assert_eq!(f.bound, BoundSpec::Choice(BoundChoice::Attacked));
        let f: FilterConfig = serde_json::from_str(r#"{"h_gradient": [-1], "u_des": [1], "bound": 0.3}"#).unwrap();
        assert_eq!(f.bound, BoundSpec::Value(0.3));
    }
}
