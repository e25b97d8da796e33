//! Declarative scenario files and the built-in reference scenarios.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::{build_belief_system, BeliefSystem, ExperimentDesign, NoiseModel, PriorBelief};
use crate::error::{PatroError, Result};
use crate::expectation::{Expectations, QuadratureSpec};
use crate::snr::{BuiltinModel, DemandKind, NewsvendorSnr, PricingSnr, ServiceCapacitySnr};
use crate::solver::SolverConfig;

/// Payoff model and its parameters, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Newsvendor { p: f64, c_u: f64, c_o: f64, mu: f64 },
    Service { p: f64, s: f64, a: f64 },
    PricingLinear { a: f64, b: f64 },
    PricingLoglinear { a: f64, b: f64 },
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Newsvendor { .. } => "newsvendor",
            Self::Service { .. } => "service",
            Self::PricingLinear { .. } => "pricing_linear",
            Self::PricingLoglinear { .. } => "pricing_loglinear",
        }
    }

    /// Instantiates the model for rollout scale `n` and noise level `sigma_eps`.
    pub fn build(&self, sigma_eps: f64, n: usize) -> Result<BuiltinModel<f64>> {
        Ok(match *self {
            Self::Newsvendor { p, c_u, c_o, mu } => {
                BuiltinModel::Newsvendor(NewsvendorSnr::new(p, c_u, c_o, mu, sigma_eps, n)?)
            }
            Self::Service { p, s, a } => BuiltinModel::Service(ServiceCapacitySnr::new(p, s, a, sigma_eps, n)?),
            Self::PricingLinear { a, b } => {
                BuiltinModel::Pricing(PricingSnr::new(a, b, sigma_eps, DemandKind::Linear, n)?)
            }
            Self::PricingLoglinear { a, b } => {
                BuiltinModel::Pricing(PricingSnr::new(a, b, sigma_eps, DemandKind::LogLinear, n)?)
            }
        })
    }
}

/// One sample size or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSizes {
    One(usize),
    Many(Vec<usize>),
}

impl SampleSizes {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Self::One(n) => vec![*n],
            Self::Many(ns) => ns.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub n: SampleSizes,
    pub gamma: f64,
}

/// Reference improvement rates for the sample sizes of the design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub label: String,
    pub improvement_pct: Vec<f64>,
    /// The parameters do not pin the row down uniquely.
    #[serde(default)]
    pub parameter_ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub replications: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { replications: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub prior: PriorBelief<f64>,
    pub design: DesignConfig,
    pub noise: NoiseModel<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceRow>,
}

/// Model, belief and quadrature for one sample size.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: usize,
    pub model: BuiltinModel<f64>,
    pub expectations: Expectations<f64>,
}

impl Instance {
    pub fn belief(&self) -> &BeliefSystem<f64> {
        self.expectations.belief()
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| PatroError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PatroError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn sample_sizes(&self) -> Vec<usize> {
        self.design.n.to_vec()
    }

    fn validate(&self) -> Result<()> {
        let config = |e: PatroError| PatroError::Config(e.to_string());
        let ns = self.sample_sizes();
        if ns.is_empty() {
            return Err(PatroError::Config("design.n is empty".into()));
        }
        for &n in &ns {
            self.instance(n).map_err(config)?;
        }
        self.solver.validate().map_err(config)?;
        if let Some(r) = &self.reference {
            if r.improvement_pct.len() != ns.len() {
                return Err(PatroError::Config(format!(
                    "reference.improvement_pct has {} values for {} sample sizes",
                    r.improvement_pct.len(),
                    ns.len()
                )));
            }
        }
        Ok(())
    }

    pub fn instance(&self, n: usize) -> Result<Instance> {
        let design = ExperimentDesign { n, gamma: self.design.gamma };
        let belief = build_belief_system(self.prior, design, self.noise)?;
        let model = self.model.build(self.noise.sigma_eps, n)?;
        let expectations = Expectations::new(belief, self.quadrature)?;
        Ok(Instance { n, model, expectations })
    }

    pub fn instances(&self) -> Result<Vec<Instance>> {
        self.sample_sizes().into_iter().map(|n| self.instance(n)).collect()
    }
}

/// A built-in scenario file.
#[derive(Debug, Clone, Copy)]
pub struct BuiltinScenario {
    pub name: &'static str,
    pub toml: &'static str,
}

impl BuiltinScenario {
    pub fn config(&self) -> ScenarioConfig {
        ScenarioConfig::from_toml_str(self.toml).expect("built-in scenarios are valid")
    }
}

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(BuiltinScenario { name: $name, toml: include_str!(concat!("../scenarios/", $name, ".toml")) }),*]
    };
}

/// The nine reference scenarios, in table order.
pub const TABLE1: &[BuiltinScenario] = builtin![
    "newsvendor_cr011_v1_s1",
    "newsvendor_cr011_v2_s2",
    "newsvendor_cr080_v2_s1",
    "service_a1_v1_s1",
    "service_a1_v4_s2",
    "service_a2_v1_s2",
    "pricing_a1_v2_s1",
    "pricing_a4_v5_s1",
    "pricing_a1_v5_s2",
];

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    TABLE1.iter().find(|s| s.name == name).map(BuiltinScenario::config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snr::SnrModel;

    #[test]
    fn builtins_parse() {
        assert_eq!(TABLE1.len(), 9);
        for s in TABLE1 {
            let cfg = s.config();
            assert_eq!(cfg.sample_sizes(), vec![10, 30, 50, 70, 90]);
            assert_eq!(cfg.design.gamma, 1.0);
            assert_eq!(cfg.prior.m0, 0.0);
            let r = cfg.reference.as_ref().unwrap();
            assert_eq!(r.parameter_ambiguous, s.name == "newsvendor_cr080_v2_s1");
        }
        let nv = builtin("newsvendor_cr080_v2_s1").unwrap();
        match nv.instance(10).unwrap().model {
            BuiltinModel::Newsvendor(m) => assert!((m.critical_ratio() - 0.8).abs() < 1e-15),
            _ => panic!("wrong model"),
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = builtin("service_a1_v1_s1").unwrap();
        let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn single_sample_size_and_defaults() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            [model]
            kind = "pricing_linear"
            a = 1.0
            b = 1.0
            [prior]
            m0 = 0.0
            v0 = 1.0
            [design]
            n = 40
            gamma = 0.5
            [noise]
            sigma_eps = 1.0
            b = 3.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sample_sizes(), vec![40]);
        assert_eq!(cfg.solver, SolverConfig::default());
        let inst = cfg.instance(40).unwrap();
        assert_eq!(inst.model.name(), "pricing_linear");
        assert_eq!(inst.model.scale_n(), 40);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let base = builtin("service_a1_v1_s1").unwrap().to_toml_string();
        let extra = base.replace("[prior]", "[prior]\nv1 = 2.0");
        assert!(matches!(ScenarioConfig::from_toml_str(&extra), Err(PatroError::Config(_))));
        let extra_model = base.replace("kind = \"service\"", "kind = \"service\"\nc_u = 1.0");
        assert!(ScenarioConfig::from_toml_str(&extra_model).is_err());
        let top = format!("colour = 1\n{base}");
        assert!(ScenarioConfig::from_toml_str(&top).is_err());
        let bad = base.replace("v0 = 1.0", "v0 = -1.0");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
        let kind = base.replace("kind = \"service\"", "kind = \"queue\"");
        assert!(ScenarioConfig::from_toml_str(&kind).is_err());
    }
}
