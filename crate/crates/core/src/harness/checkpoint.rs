//! Single-file checkpoints: config, parameters, vocabularies, RNG state.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::dataset::Vocabularies;
use crate::error::{DtiError, Result};
use crate::harness::splits::DatasetSplit;
use crate::model::{TriModalModel, Variant};
use crate::tokenizer::Vocabulary;

const MAGIC: &[u8; 8] = b"TRIMODCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// JSON-encoded [`ModelConfig`], so the archive stays readable when
    /// config fields are added.
    pub config_json: String,
    pub variant: Variant,
    pub seed: u64,
    pub params: BTreeMap<String, (Vec<usize>, Vec<f64>)>,
    pub drug_vocab_json: String,
    pub protein_vocab_json: String,
    pub rng_seed: u64,
    pub rng_word_pos: u128,
    pub best_epoch: Option<usize>,
    pub split: Option<DatasetSplit>,
    pub dataset: String,
}

impl Checkpoint {
    #[allow(clippy::too_many_arguments)]
    pub fn capture(
        model: &TriModalModel,
        vocabs: &Vocabularies,
        variant: Variant,
        seed: u64,
        rng_state: (u64, u128),
        best_epoch: Option<usize>,
        split: Option<DatasetSplit>,
        dataset: &str,
    ) -> Result<Self> {
        Ok(Checkpoint {
            config_json: model.config.to_json()?,
            variant,
            seed,
            params: model.store.snapshot()?,
            drug_vocab_json: vocabs.drug.to_json()?,
            protein_vocab_json: vocabs.protein.to_json()?,
            rng_seed: rng_state.0,
            rng_word_pos: rng_state.1,
            best_epoch,
            split,
            dataset: dataset.to_string(),
        })
    }

    pub fn config(&self) -> Result<ModelConfig> {
        ModelConfig::from_str_with_format(&self.config_json, false)
    }

    pub fn vocabularies(&self) -> Result<Vocabularies> {
        Ok(Vocabularies {
            drug: Vocabulary::from_json(&self.drug_vocab_json)?,
            protein: Vocabulary::from_json(&self.protein_vocab_json)?,
        })
    }

    /// Rebuild the model with the stored parameters.
    pub fn restore_model(&self) -> Result<(TriModalModel, Vocabularies)> {
        let config = self.config()?;
        let vocabs = self.vocabularies()?;
        let model = TriModalModel::new(&config, vocabs.drug.len(), vocabs.protein.len(), self.seed)?;
        model.store.restore(&self.params)?;
        Ok((model, vocabs))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend(bincode::serialize(self)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], source: &str) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(DtiError::parse(source, None, "not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(DtiError::parse(
                source,
                None,
                format!("checkpoint version {version}, expected {CHECKPOINT_VERSION}"),
            ));
        }
        Ok(bincode::deserialize(&bytes[12..])?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| DtiError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| DtiError::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}
