use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dr::RefitSchedule;
use crate::env::{
    generate_instance, lower_bound_instance_thm1, lower_bound_instance_three_arm, FeatureCase,
    ProblemInstance, Scenario, ScenarioConfig,
};
use crate::error::{Error, Result};
use crate::policy::{Algorithm, ExplorationScale, PolicyConfig};

/// Which problem instance an experiment runs on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InstanceSpec {
    /// Synthetic instance, redrawn for every seed.
    Synthetic { scenario: Scenario, case: FeatureCase },
    /// Two-arm lower-bound instance.
    Thm1,
    /// Three-arm lower-bound instance with `d` observed and `d_u` latent
    /// coordinates.
    ThreeArm { d: usize, d_u: usize },
}

impl InstanceSpec {
    pub fn build(&self, seed: u64) -> Result<ProblemInstance> {
        match *self {
            InstanceSpec::Synthetic { scenario, case } => {
                generate_instance(&ScenarioConfig::new(scenario, case, seed))
            }
            InstanceSpec::Thm1 => Ok(lower_bound_instance_thm1()),
            InstanceSpec::ThreeArm { d, d_u } => lower_bound_instance_three_arm(d, d_u),
        }
    }
}

/// How often the DR Lasso refits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefitMode {
    /// Every matched round up to `t = 200`, then every `ceil(t / 100)` rounds.
    Sparse,
    /// Every matched round.
    Every,
}

/// Raw file contents. Every key is optional; see [`ExperimentConfig`] for
/// defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    instance: Option<String>,
    scenario: Option<u8>,
    case: Option<u8>,
    appf_d: Option<usize>,
    appf_du: Option<usize>,
    algorithms: Option<Vec<String>>,
    horizon: Option<usize>,
    seeds: Option<Vec<u64>>,
    master_seed: Option<u64>,
    p: Option<f64>,
    delta: Option<f64>,
    delta_prime: Option<f64>,
    sigma: Option<f64>,
    exploration_scale: Option<f64>,
    penalty_scale: Option<f64>,
    refit: Option<RefitMode>,
    time_varying: Option<bool>,
    jitter: Option<f64>,
    out: Option<PathBuf>,
    plot: Option<bool>,
}

/// A complete experiment description.
///
/// Config files are flat TOML; all keys are optional:
///
/// ```toml
/// instance = "scenario"     # "scenario" | "thm1" | "appF"
/// scenario = 1              # 1 = partially observed, 2 = fully observed
/// case = 1                  # 1, 2 or 3
/// appf_d = 2                # appF only
/// appf_du = 2               # appF only, positive and even
/// algorithms = ["rolf_lasso", "rolf_ridge", "linucb", "lints", "ucb_delta", "drlasso"]
/// horizon = 1200
/// seeds = [1, 2, 3, 4, 5]
/// master_seed = 0
/// p = 0.6
/// delta = 1e-4
/// delta_prime = 1e-4        # defaults to delta
/// sigma = 0.05              # defaults to the instance's noise level
/// exploration_scale = 0.01  # omit for the automatic scale
/// penalty_scale = 1.0       # multiplier on the RoLF-Lasso penalties
/// refit = "sparse"          # "sparse" | "every"
/// time_varying = false
/// jitter = 0.0              # observed-feature noise per round when time_varying
/// out = "out"
/// plot = false
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub algorithms: Vec<Algorithm>,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub p: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Noise level; `None` keeps the instance's own.
    pub sigma: Option<f64>,
    /// `None` selects [`ExplorationScale::Auto`].
    pub exploration_scale: Option<f64>,
    /// Multiplier on the RoLF-Lasso penalty schedule.
    pub penalty_scale: f64,
    pub refit: RefitMode,
    /// Observed features are redrawn every round around the instance's `X`.
    pub time_varying: bool,
    pub jitter: f64,
    pub out: PathBuf,
    pub plot: bool,
}

/// Algorithms compared on synthetic fixed-feature instances.
pub const DEFAULT_ALGORITHMS: [Algorithm; 6] = [
    Algorithm::RolfLasso,
    Algorithm::RolfRidge,
    Algorithm::LinUcb,
    Algorithm::LinTs,
    Algorithm::UcbDelta,
    Algorithm::DrLasso,
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instance: InstanceSpec::Synthetic {
                scenario: Scenario::PartiallyObserved,
                case: FeatureCase::General,
            },
            algorithms: DEFAULT_ALGORITHMS.to_vec(),
            horizon: 1200,
            seeds: vec![1, 2, 3, 4, 5],
            master_seed: 0,
            p: 0.6,
            delta: 1e-4,
            delta_prime: 1e-4,
            sigma: None,
            exploration_scale: None,
            penalty_scale: 1.0,
            refit: RefitMode::Sparse,
            time_varying: false,
            jitter: 0.0,
            out: PathBuf::from("out"),
            plot: false,
        }
    }
}

impl ExperimentConfig {
    /// Default config on a synthetic scenario/case.
    pub fn synthetic(scenario: Scenario, case: FeatureCase) -> Self {
        Self {
            instance: InstanceSpec::Synthetic { scenario, case },
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = Self::default();
        let scenario = raw.scenario.map(Scenario::from_number).transpose()?;
        let case = raw.case.map(FeatureCase::from_number).transpose()?;
        cfg.instance = match raw.instance.as_deref().unwrap_or("scenario") {
            "scenario" => InstanceSpec::Synthetic {
                scenario: scenario.unwrap_or(Scenario::PartiallyObserved),
                case: case.unwrap_or(FeatureCase::General),
            },
            other => {
                if scenario.is_some() || case.is_some() {
                    return Err(Error::Config(format!(
                        "'scenario' and 'case' only apply to instance = \"scenario\", not \"{other}\""
                    )));
                }
                match other {
                    "thm1" => InstanceSpec::Thm1,
                    "appF" => InstanceSpec::ThreeArm {
                        d: raw.appf_d.unwrap_or(2),
                        d_u: raw.appf_du.unwrap_or(2),
                    },
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown instance '{other}' (expected scenario, thm1 or appF)"
                        )))
                    }
                }
            }
        };
        if !matches!(cfg.instance, InstanceSpec::ThreeArm { .. })
            && (raw.appf_d.is_some() || raw.appf_du.is_some())
        {
            return Err(Error::Config("'appf_d'/'appf_du' require instance = \"appF\"".into()));
        }
        if let Some(names) = raw.algorithms {
            cfg.algorithms = names
                .iter()
                .map(|n| n.parse())
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(v) = raw.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = raw.seeds {
            cfg.seeds = v;
        }
        if let Some(v) = raw.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = raw.p {
            cfg.p = v;
        }
        if let Some(v) = raw.delta {
            cfg.delta = v;
        }
        cfg.delta_prime = raw.delta_prime.unwrap_or(cfg.delta);
        cfg.sigma = raw.sigma;
        cfg.exploration_scale = raw.exploration_scale;
        if let Some(v) = raw.penalty_scale {
            cfg.penalty_scale = v;
        }
        if let Some(v) = raw.refit {
            cfg.refit = v;
        }
        if let Some(v) = raw.time_varying {
            cfg.time_varying = v;
        }
        if let Some(v) = raw.jitter {
            cfg.jitter = v;
        }
        if let Some(v) = raw.out {
            cfg.out = v;
        }
        if let Some(v) = raw.plot {
            cfg.plot = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must be non-empty".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must be non-empty".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return bad(format!("algorithm '{a}' listed twice"));
            }
        }
        if !(self.p > 0.5 && self.p < 1.0) {
            return bad(format!("p must lie in (1/2, 1), got {}", self.p));
        }
        for (name, v) in [("delta", self.delta), ("delta_prime", self.delta_prime)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("sigma must be non-negative, got {s}"));
            }
        }
        if let Some(s) = self.exploration_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("exploration_scale must be positive, got {s}"));
            }
        }
        if !(self.penalty_scale >= 0.0 && self.penalty_scale.is_finite()) {
            return bad(format!("penalty_scale must be non-negative, got {}", self.penalty_scale));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad(format!("jitter must be non-negative, got {}", self.jitter));
        }
        if self.jitter > 0.0 && !self.time_varying {
            return bad("jitter requires time_varying = true".into());
        }
        for &a in &self.algorithms {
            if self.time_varying && a.needs_fixed_features() {
                return bad(format!("'{a}' needs fixed features; drop it or set time_varying = false"));
            }
            if !self.time_varying && a == Algorithm::RolfV {
                return bad("'rolf_v' needs time_varying = true".into());
            }
        }
        match self.instance {
            InstanceSpec::Synthetic { scenario, case } => {
                ScenarioConfig::new(scenario, case, 0).validate()?;
            }
            InstanceSpec::ThreeArm { d, d_u } => {
                lower_bound_instance_three_arm(d, d_u)
                    .map_err(|e| Error::Config(e.to_string()))?;
            }
            InstanceSpec::Thm1 => {}
        }
        Ok(())
    }

    /// Policy hyperparameters for a given instance noise level.
    pub fn policy_config(&self, sigma: f64) -> PolicyConfig {
        let mut pc = PolicyConfig::new(self.horizon);
        pc.p = self.p;
        pc.delta = self.delta;
        pc.delta_prime = self.delta_prime;
        pc.sigma = sigma;
        pc.exploration = match self.exploration_scale {
            Some(s) => ExplorationScale::Fixed(s),
            None => ExplorationScale::Auto,
        };
        pc.penalty_scale = self.penalty_scale;
        pc.refit = match self.refit {
            RefitMode::Sparse => RefitSchedule::default(),
            RefitMode::Every => RefitSchedule::EveryMatched,
        };
        pc
    }
}
