//! Declarative model and training configuration (JSON or TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoders::geometric::GvpParams;
use crate::encoders::graph::TagcnParams;
use crate::encoders::sequence::TransformerParams;
use crate::error::{DtiError, Result};
use crate::fusion::LossWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitScheme {
    #[serde(rename = "repeated_8_1_1")]
    Repeated811,
    GpcrFixed,
    /// Classic k-fold: each fold is test once; validation is carved from
    /// the remaining folds.
    KFold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embed_dim: usize,

    pub drug_vocab_size: usize,
    pub protein_vocab_size: usize,
    pub min_pair_freq: usize,
    pub drug_max_len: usize,
    pub protein_max_len: usize,

    pub transformer_layers: usize,
    pub attention_heads: usize,
    pub model_dim: usize,
    pub feedforward_dim: usize,

    pub gcn_hidden: usize,
    pub gcn_layers: usize,

    pub tagcn_hops: usize,
    pub tagcn_layers: usize,
    pub tagcn_hidden: usize,

    pub gvp_layers: usize,
    pub gvp_scalar_hidden: usize,
    pub gvp_vector_hidden: usize,

    pub mlp_hidden1: usize,
    pub mlp_hidden2: usize,
    pub dropout: f64,

    pub temperature: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,

    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub threshold: f64,

    pub seed: u64,
    pub runs: usize,
    pub repeats: usize,
    pub split_scheme: SplitScheme,
    pub pocket_atom_cap: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 128,
            drug_vocab_size: 2048,
            protein_vocab_size: 8192,
            min_pair_freq: 5,
            drug_max_len: 256,
            protein_max_len: 1024,
            transformer_layers: 2,
            attention_heads: 4,
            model_dim: 128,
            feedforward_dim: 512,
            gcn_hidden: 128,
            gcn_layers: 2,
            tagcn_hops: 2,
            tagcn_layers: 2,
            tagcn_hidden: 64,
            gvp_layers: 3,
            gvp_scalar_hidden: 64,
            gvp_vector_hidden: 16,
            mlp_hidden1: 512,
            mlp_hidden2: 128,
            dropout: 0.2,
            temperature: crate::contrastive::DEFAULT_TEMPERATURE,
            alpha: 1.0,
            beta: 0.1,
            gamma: 0.1,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            batch_size: 32,
            epochs: 100,
            patience: 10,
            threshold: 0.5,
            seed: 42,
            runs: 10,
            repeats: 5,
            split_scheme: SplitScheme::Repeated811,
            pocket_atom_cap: crate::ingest::pockets::DEFAULT_POCKET_ATOM_CAP,
        }
    }
}

impl ModelConfig {
    /// Small widths for CPU smoke runs and tests.
    pub fn desk() -> Self {
        ModelConfig {
            embed_dim: 32,
            drug_vocab_size: 256,
            protein_vocab_size: 512,
            min_pair_freq: 2,
            drug_max_len: 64,
            protein_max_len: 128,
            transformer_layers: 1,
            attention_heads: 4,
            model_dim: 32,
            feedforward_dim: 64,
            gcn_hidden: 32,
            tagcn_hidden: 32,
            gvp_scalar_hidden: 32,
            gvp_vector_hidden: 8,
            gvp_layers: 2,
            mlp_hidden1: 64,
            mlp_hidden2: 32,
            dropout: 0.0,
            batch_size: 8,
            patience: 0,
            runs: 1,
            repeats: 1,
            epochs: 30,
            ..ModelConfig::default()
        }
    }

    pub fn transformer(&self) -> TransformerParams {
        TransformerParams {
            num_layers: self.transformer_layers,
            num_heads: self.attention_heads,
            model_dim: self.model_dim,
            feedforward_dim: self.feedforward_dim,
            dropout: self.dropout,
        }
    }

    pub fn tagcn(&self) -> TagcnParams {
        TagcnParams {
            hops: self.tagcn_hops,
            layers: self.tagcn_layers,
            hidden: self.tagcn_hidden,
        }
    }

    pub fn gvp(&self) -> GvpParams {
        GvpParams {
            layers: self.gvp_layers,
            scalar_hidden: self.gvp_scalar_hidden,
            vector_hidden: self.gvp_vector_hidden,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("embed_dim", self.embed_dim),
            ("model_dim", self.model_dim),
            ("gcn_hidden", self.gcn_hidden),
            ("gcn_layers", self.gcn_layers),
            ("tagcn_hops", self.tagcn_hops),
            ("tagcn_layers", self.tagcn_layers),
            ("tagcn_hidden", self.tagcn_hidden),
            ("gvp_scalar_hidden", self.gvp_scalar_hidden),
            ("gvp_vector_hidden", self.gvp_vector_hidden),
            ("mlp_hidden1", self.mlp_hidden1),
            ("mlp_hidden2", self.mlp_hidden2),
            ("batch_size", self.batch_size),
            ("drug_max_len", self.drug_max_len),
            ("protein_max_len", self.protein_max_len),
            ("runs", self.runs),
            ("repeats", self.repeats),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(DtiError::Config(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(DtiError::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if !(self.temperature > 0.0) {
            return Err(DtiError::Config(format!("temperature {} must be positive", self.temperature)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(DtiError::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.weight_decay < 0.0 {
            return Err(DtiError::Config("weight_decay must be non-negative".into()));
        }
        self.transformer().validate()?;
        self.loss_weights().validate()
    }

    /// Parse JSON or TOML, chosen by extension (`.toml` is TOML, anything
    /// else JSON).
    pub fn from_str_with_format(text: &str, toml_format: bool) -> Result<Self> {
        let cfg: ModelConfig = if toml_format {
            toml::from_str(text).map_err(|e| DtiError::Config(e.to_string()))?
        } else {
            serde_json::from_str(text).map_err(|e| DtiError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DtiError::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::from_str_with_format(&text, is_toml)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Set one field by name from a JSON value, as used by grid sweeps.
    pub fn with_override(&self, key: &str, value: &serde_json::Value) -> Result<Self> {
        let mut obj = serde_json::to_value(self)?;
        let map = obj.as_object_mut().expect("config serialises to an object");
        if !map.contains_key(key) {
            return Err(DtiError::Config(format!("unknown config field {key:?}")));
        }
        map.insert(key.to_string(), value.clone());
        let cfg: ModelConfig = serde_json::from_value(obj).map_err(|e| DtiError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
