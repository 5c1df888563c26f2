//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use robcon::dynamics::DisturbanceSpec;
use robcon::event_triggered::EtConfig;
use robcon::scenarios::{example_one, necessity_counterexample, random_uqsc, sparse_ijc, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    EventTriggered,
    CertifyOnly,
}

/// Parameters of one of the built-in scenario generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    ExampleOne {
        horizon: f64,
    },
    NecessityCounterexample {
        n: usize,
        t_star: f64,
    },
    RandomUqsc {
        n: usize,
        window: f64,
        tau_d: f64,
        horizon: f64,
        #[serde(default)]
        seed: u64,
    },
    SparseIjc {
        n: usize,
        gap_growth: f64,
        tau_d: f64,
        horizon: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl Generator {
    pub fn build(&self) -> robcon::Result<Scenario> {
        match *self {
            Generator::ExampleOne { horizon } => example_one(horizon),
            Generator::NecessityCounterexample { n, t_star } => necessity_counterexample(n, t_star),
            Generator::RandomUqsc {
                n,
                window,
                tau_d,
                horizon,
                seed,
            } => random_uqsc(n, window, tau_d, horizon, seed),
            Generator::SparseIjc {
                n,
                gap_growth,
                tau_d,
                horizon,
                seed,
            } => sparse_ijc(n, gap_growth, tau_d, horizon, seed),
        }
    }

    pub fn set_seed(&mut self, value: u64) {
        match self {
            Generator::RandomUqsc { seed, .. } | Generator::SparseIjc { seed, .. } => *seed = value,
            Generator::ExampleOne { .. } | Generator::NecessityCounterexample { .. } => {}
        }
    }

    pub fn set_n(&mut self, value: usize) -> Result<()> {
        match self {
            Generator::NecessityCounterexample { n, .. }
            | Generator::RandomUqsc { n, .. }
            | Generator::SparseIjc { n, .. } => *n = value,
            Generator::ExampleOne { .. } => bail!("example_one has a fixed network size"),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSource {
    Inline(Box<Scenario>),
    File(PathBuf),
    Generator(Generator),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    /// Defaults to a step derived from the dwell time.
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSettings {
    /// Window for the certificate; otherwise the declared window or the
    /// smallest window the signal satisfies.
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
}

fn default_eps() -> Vec<f64> {
    vec![0.5, 0.1, 0.01]
}

impl Default for CertificateSettings {
    fn default() -> Self {
        CertificateSettings {
            window: None,
            eps: default_eps(),
        }
    }
}

/// Lists of values to sweep; an absent list keeps the configured value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub n: Option<Vec<usize>>,
    pub window: Option<Vec<f64>>,
    pub amplitude: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub l0: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub seed: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSource,
    pub mode: Mode,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub certificate: CertificateSettings,
    /// Replaces the scenario's disturbance.
    #[serde(default)]
    pub disturbance: Option<DisturbanceSpec>,
    /// Replaces the scenario's event-triggered settings.
    #[serde(default)]
    pub event_triggered: Option<EtConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    /// Directory that relative scenario paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid experiment config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config =
            Self::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// The scenario with the config's seed, disturbance and event-triggered
    /// overrides applied.
    pub fn resolve_scenario(&self) -> Result<Scenario> {
        let mut scenario = match &self.scenario {
            ScenarioSource::Inline(s) => (**s).clone(),
            ScenarioSource::File(path) => {
                let path = self.base_dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("scenario file {} does not exist", path.display()))?;
                Scenario::from_json(&text)
                    .with_context(|| format!("in scenario file {}", path.display()))?
            }
            ScenarioSource::Generator(g) => {
                let mut g = g.clone();
                if let Some(seed) = self.seed {
                    g.set_seed(seed);
                }
                g.build().context("scenario generator failed")?
            }
        };
        if let Some(w) = &self.disturbance {
            scenario.disturbance = w.clone();
        }
        if let Some(et) = &self.event_triggered {
            scenario.event_triggered = Some(et.clone());
        }
        if self.seed.is_some() {
            scenario.seed = self.seed;
        }
        scenario.validate().context("invalid scenario")?;
        if self.mode == Mode::EventTriggered && scenario.event_triggered.is_none() {
            bail!("mode event_triggered needs an event_triggered section");
        }
        Ok(scenario)
    }
}
