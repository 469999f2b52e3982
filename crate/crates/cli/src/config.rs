//! TOML run configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every block is optional.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ksn_core::evaluation::EvalConfig;
use ksn_core::model::{LossKind, TrainingConfig};
use ksn_core::simulation::{PersonaLaw, SimulationConfig, SubsetSizeLaw};
use ksn_core::strategies::{DescentScope, SessionConfig, StrategyKind};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub ontology: PathBuf,
    pub cohort: PathBuf,
    pub out: PathBuf,
    /// Trained model; defaults to `<out>/model.json`.
    pub model: Option<PathBuf>,
    pub synth: SynthBlock,
    pub simulation: SimulationBlock,
    pub training: TrainingBlock,
    pub assessment: AssessmentBlock,
    pub sweep: SweepBlock,
    pub serve: ServeBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ontology: "ontology.json".into(),
            cohort: "cohort.csv".into(),
            out: "out".into(),
            model: None,
            synth: SynthBlock::default(),
            simulation: SimulationBlock::default(),
            training: TrainingBlock::default(),
            assessment: AssessmentBlock::default(),
            sweep: SweepBlock::default(),
            serve: ServeBlock::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthBlock {
    /// Writes a prerequisite-free ontology of this size when the ontology
    /// file does not exist yet.
    pub skills: Option<usize>,
    pub personas: Vec<PersonaGroup>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonaGroup {
    pub count: usize,
    pub law: PersonaLaw,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationBlock {
    pub samples_per_learner: usize,
    pub subset_size_law: SubsetSizeLaw,
    /// Learners with a smaller fraction of known skills are left out.
    pub completeness_floor: f64,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self {
            samples_per_learner: 64,
            subset_size_law: SubsetSizeLaw::default(),
            completeness_floor: 0.8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingBlock {
    /// Hidden widths; two layers of twice the skill count when absent.
    pub hidden: Option<Vec<usize>>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub init_scale: f64,
    pub loss: LossKind,
    pub mask_unknown: bool,
}

impl Default for TrainingBlock {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            hidden: None,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            momentum: 0.9,
            init_scale: t.init_scale,
            loss: t.loss_kind,
            mask_unknown: t.mask_unknown,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessmentBlock {
    pub strategy: StrategyKind,
    pub epsilon: f64,
    pub tau: f64,
    pub descent_scope: DescentScope,
    pub session_length: usize,
    pub exploration: f64,
}

impl Default for AssessmentBlock {
    fn default() -> Self {
        Self {
            strategy: StrategyKind::default(),
            epsilon: 0.1,
            tau: 0.5,
            descent_scope: DescentScope::default(),
            session_length: 3,
            exploration: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            ks: vec![10, 20, 30, 40, 50],
            seeds: (0..5).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeBlock {
    pub bind: String,
    /// Session journals and transcripts; defaults to `<out>/service`.
    pub data_dir: Option<PathBuf>,
    /// Correction pool; defaults to `<data_dir>/corrections.csv`.
    pub pool: Option<PathBuf>,
}

impl Default for ServeBlock {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            data_dir: None,
            pool: None,
        }
    }
}

impl RunConfig {
    /// Reads `path`, or returns defaults rooted at the working directory
    /// when no config is given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.ontology);
        fix(&mut self.cohort);
        fix(&mut self.out);
        for p in [&mut self.model, &mut self.serve.data_dir, &mut self.serve.pool].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.json"))
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        SimulationConfig {
            samples_per_learner: self.simulation.samples_per_learner,
            subset_size_law: self.simulation.subset_size_law.clone(),
            rng_seed: 0,
        }
    }

    pub fn training_config(&self) -> TrainingConfig {
        let t = &self.training;
        TrainingConfig {
            loss_kind: t.loss,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            rng_seed: 0,
            init_scale: t.init_scale,
            momentum: t.momentum,
            mask_unknown: t.mask_unknown,
        }
    }

    pub fn eval_config(&self) -> ksn_core::Result<EvalConfig> {
        let a = &self.assessment;
        let mut cfg = EvalConfig::new(self.training_config(), self.simulation_config(), a.strategy.clone(), self.seed);
        cfg.hidden = self.training.hidden.clone();
        cfg.completeness_floor = self.simulation.completeness_floor;
        cfg.epsilon = a.epsilon;
        cfg.tau = a.tau;
        cfg.descent_scope = a.descent_scope;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn session_config(&self, rng_seed: u64) -> SessionConfig {
        SessionConfig {
            length: self.assessment.session_length,
            exploration: self.assessment.exploration,
            epsilon: self.assessment.epsilon,
            rng_seed,
        }
    }
}
