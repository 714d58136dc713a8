//! `key = value` settings covering every tunable of the engine.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bpnet::{NetConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::ews::{AbnormalTrigger, ScoreBands};
use crate::ga::GaConfig;
use crate::lms::FilterConfig;
use crate::monitor::PipelineConfig;

/// Environment variable naming the default settings file.
pub const CONFIG_ENV: &str = "VITALGUARD_CONFIG";

pub const KEYS: &[&str] = &[
    "filter_order",
    "filter_mu",
    "population",
    "generations",
    "crossover_rate",
    "mutation_rate",
    "gene_min",
    "gene_max",
    "fitness_k",
    "fitness_epsilon",
    "elitism",
    "mutation_variant",
    "hidden_nodes",
    "lr_start",
    "lr_end",
    "momentum",
    "max_epochs",
    "target_error_rate",
    "seed",
    "t_threshold_s",
    "trigger",
    "bands",
    "bind",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub filter_order: usize,
    pub filter_mu: f64,
    pub ga: GaConfig,
    pub hidden_nodes: usize,
    pub train: TrainConfig,
    pub seed: u64,
    pub t_threshold_ms: i64,
    pub trigger: AbnormalTrigger,
    /// Score-band override file, see [`ScoreBands::from_config`].
    pub bands: Option<PathBuf>,
    pub bind: String,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            filter_order: 8,
            filter_mu: 0.01,
            ga: GaConfig::default(),
            hidden_nodes: 25,
            train: TrainConfig::default(),
            seed: 0,
            t_threshold_ms: 60_000,
            trigger: AbnormalTrigger::Total,
            bands: None,
            bind: "127.0.0.1:7878".into(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        s.merge(text)?;
        Ok(s)
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn merge(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "filter_order" => self.filter_order = parse(key, value)?,
            "filter_mu" => self.filter_mu = parse(key, value)?,
            "population" => self.ga.population_size = parse(key, value)?,
            "generations" => self.ga.max_generations = parse(key, value)?,
            "crossover_rate" => self.ga.p_crossover = parse(key, value)?,
            "mutation_rate" => self.ga.p_mutation = parse(key, value)?,
            "gene_min" => self.ga.gene_bounds.0 = parse(key, value)?,
            "gene_max" => self.ga.gene_bounds.1 = parse(key, value)?,
            "fitness_k" => self.ga.fitness_k = parse(key, value)?,
            "fitness_epsilon" => self.ga.fitness_epsilon = parse(key, value)?,
            "elitism" => self.ga.elitism = parse(key, value)?,
            "mutation_variant" => self.ga.mutation_variant = value.parse()?,
            "hidden_nodes" => self.hidden_nodes = parse(key, value)?,
            "lr_start" => self.train.lr_start = parse(key, value)?,
            "lr_end" => self.train.lr_end = parse(key, value)?,
            "momentum" => self.train.momentum = parse(key, value)?,
            "max_epochs" => self.train.max_epochs = parse(key, value)?,
            "target_error_rate" => self.train.target_error_rate = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "t_threshold_s" => {
                let secs: f64 = parse(key, value)?;
                if !(secs >= 0.0) || !secs.is_finite() {
                    return Err(Error::Config(format!("t_threshold_s must be non-negative, got {value}")));
                }
                self.t_threshold_ms = (secs * 1000.0).round() as i64;
            }
            "trigger" => self.trigger = value.parse()?,
            "bands" => self.bands = (!value.is_empty()).then(|| PathBuf::from(value)),
            "bind" => self.bind = value.to_string(),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Loads `explicit` if given, else the file named by `VITALGUARD_CONFIG`,
    /// else the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            rng_seed: self.seed,
            ..self.ga.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            rng_seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig::forecaster(self.hidden_nodes)
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig::smoothing(self.filter_order, self.filter_mu)
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let bands = match &self.bands {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                ScoreBands::from_config(&text)?
            }
            None => ScoreBands::default(),
        };
        let filter = self.filter_config();
        filter.validate()?;
        Ok(PipelineConfig {
            filter,
            bands,
            t_threshold_ms: self.t_threshold_ms,
            trigger: self.trigger,
        })
    }
}
