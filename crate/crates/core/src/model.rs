//! The full tri-modal model: six encoders, contrastive alignment, fusion
//! and the interaction classifier.

use std::str::FromStr;

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::contrastive::{trimodal_loss_masked, ModalBatch, PairMask};
use crate::encoders::geometric::{GeoBatch, GeometricEncoder};
use crate::encoders::graph::{GcnEncoder, PocketEncoder};
use crate::encoders::sequence::SequenceEncoder;
use crate::error::{DtiError, Result};
use crate::fusion::{bce_loss, FusionMlp, LossWeights};
use crate::ingest::{
    Molecular2DGraph, Molecular3DGraph, PocketGraph, ResidueContactGraph, ATOM_FEATURE_DIM,
    RESIDUE_FEATURE_DIM,
};
use crate::nn::{device, ForwardCtx, ParamStore, DTYPE};
use crate::tokenizer::TokenSequence;

/// Ablation and knockout variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "all")]
    All,
    #[serde(rename = "no_CL")]
    NoCl,
    #[serde(rename = "no_L12")]
    NoL12,
    #[serde(rename = "no_L23")]
    NoL23,
    #[serde(rename = "no_L13")]
    NoL13,
    #[serde(rename = "seq_only")]
    SeqOnly,
    #[serde(rename = "graph_only")]
    GraphOnly,
    #[serde(rename = "struct3d_only")]
    Struct3dOnly,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::All,
        Variant::NoCl,
        Variant::NoL12,
        Variant::NoL23,
        Variant::NoL13,
        Variant::SeqOnly,
        Variant::GraphOnly,
        Variant::Struct3dOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::All => "all",
            Variant::NoCl => "no_CL",
            Variant::NoL12 => "no_L12",
            Variant::NoL23 => "no_L23",
            Variant::NoL13 => "no_L13",
            Variant::SeqOnly => "seq_only",
            Variant::GraphOnly => "graph_only",
            Variant::Struct3dOnly => "struct3d_only",
        }
    }

    /// Which of (seq, graph2d, struct3d) stay in the joint feature.
    pub fn modalities(self) -> [bool; 3] {
        match self {
            Variant::SeqOnly => [true, false, false],
            Variant::GraphOnly => [false, true, false],
            Variant::Struct3dOnly => [false, false, true],
            _ => [true; 3],
        }
    }

    /// Contrastive pair terms; a pair survives only if both of its
    /// modalities do.
    pub fn pairs(self) -> PairMask {
        let [m1, m2, m3] = self.modalities();
        let mut p = PairMask {
            l12: m1 && m2,
            l23: m2 && m3,
            l13: m1 && m3,
        };
        match self {
            Variant::NoCl => p = PairMask { l12: false, l23: false, l13: false },
            Variant::NoL12 => p.l12 = false,
            Variant::NoL23 => p.l23 = false,
            Variant::NoL13 => p.l13 = false,
            _ => {}
        }
        p
    }

    pub fn weights(self, base: LossWeights) -> LossWeights {
        if self.pairs().count() == 0 {
            LossWeights {
                beta: 0.0,
                gamma: 0.0,
                ..base
            }
        } else {
            base
        }
    }
}

impl FromStr for Variant {
    type Err = DtiError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                DtiError::Config(format!(
                    "unknown variant {s:?}; expected one of {}",
                    Variant::ALL.map(|v| v.name()).join(", ")
                ))
            })
    }
}

/// A drug with every input the model consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDrug {
    pub id: String,
    pub tokens: TokenSequence,
    pub graph2d: Molecular2DGraph,
    pub graph3d: Molecular3DGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedProtein {
    pub id: String,
    pub tokens: TokenSequence,
    pub pockets: Vec<PocketGraph>,
    pub residues: ResidueContactGraph,
}

pub struct TriModalModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub drug_seq: SequenceEncoder,
    pub drug_2d: GcnEncoder,
    pub drug_3d: GeometricEncoder,
    pub protein_seq: SequenceEncoder,
    pub protein_pockets: PocketEncoder,
    pub protein_3d: GcnEncoder,
    pub classifier: FusionMlp,
}

/// Three `(N, D)` modality matrices for one entity type.
pub type ModalTriple = [Tensor; 3];

pub struct BatchOutput {
    pub probs: Tensor,
    pub cl_drug: Tensor,
    pub cl_protein: Tensor,
    pub cls: Tensor,
    pub total: Tensor,
}

impl TriModalModel {
    pub fn new(config: &ModelConfig, drug_vocab: usize, protein_vocab: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let d = config.embed_dim;
        let mut store = ParamStore::new(seed);
        let s = &mut store;
        let drug_seq = SequenceEncoder::new(s, "drug.seq", drug_vocab, config.drug_max_len, config.transformer(), d)?;
        let drug_2d = GcnEncoder::new(s, "drug.graph", ATOM_FEATURE_DIM, config.gcn_hidden, config.gcn_layers, d)?;
        let drug_3d = GeometricEncoder::new(s, "drug.geo", config.gvp(), d)?;
        let protein_seq =
            SequenceEncoder::new(s, "protein.seq", protein_vocab, config.protein_max_len, config.transformer(), d)?;
        let protein_pockets = PocketEncoder::new(s, "protein.pocket", config.tagcn(), d)?;
        let protein_3d =
            GcnEncoder::new(s, "protein.residue", RESIDUE_FEATURE_DIM, config.gcn_hidden, config.gcn_layers, d)?;
        let classifier = FusionMlp::new(s, "classifier", 6 * d, config.mlp_hidden1, config.mlp_hidden2, config.dropout)?;
        Ok(TriModalModel {
            config: config.clone(),
            store,
            drug_seq,
            drug_2d,
            drug_3d,
            protein_seq,
            protein_pockets,
            protein_3d,
            classifier,
        })
    }

    fn zeros(&self, n: usize) -> Result<Tensor> {
        Ok(Tensor::zeros((n, self.config.embed_dim), DTYPE, &device())?)
    }

    /// d1, d2, d3 for each drug; disabled modalities come back as zeros.
    pub fn encode_drugs(&self, drugs: &[&PreparedDrug], keep: [bool; 3], ctx: &mut ForwardCtx) -> Result<ModalTriple> {
        let n = drugs.len();
        let d1 = if keep[0] {
            let toks: Vec<&TokenSequence> = drugs.iter().map(|d| &d.tokens).collect();
            self.drug_seq.forward(&toks, ctx)?
        } else {
            self.zeros(n)?
        };
        let d2 = if keep[1] {
            let g: Vec<(&[Vec<f64>], &[(usize, usize)])> = drugs
                .iter()
                .map(|d| (d.graph2d.node_features.as_slice(), d.graph2d.bonds.as_slice()))
                .collect();
            self.drug_2d.forward_batch(&g)?
        } else {
            self.zeros(n)?
        };
        let d3 = if keep[2] {
            let g: Vec<&Molecular3DGraph> = drugs.iter().map(|d| &d.graph3d).collect();
            self.drug_3d.forward(&GeoBatch::new(&g)?)?
        } else {
            self.zeros(n)?
        };
        Ok([d1, d2, d3])
    }

    pub fn encode_proteins(
        &self,
        proteins: &[&PreparedProtein],
        keep: [bool; 3],
        ctx: &mut ForwardCtx,
    ) -> Result<ModalTriple> {
        let n = proteins.len();
        let t1 = if keep[0] {
            let toks: Vec<&TokenSequence> = proteins.iter().map(|p| &p.tokens).collect();
            self.protein_seq.forward(&toks, ctx)?
        } else {
            self.zeros(n)?
        };
        let t2 = if keep[1] {
            let pk: Vec<&[PocketGraph]> = proteins.iter().map(|p| p.pockets.as_slice()).collect();
            self.protein_pockets.forward_batch(&pk)?
        } else {
            self.zeros(n)?
        };
        let t3 = if keep[2] {
            let g: Vec<(&[Vec<f64>], &[(usize, usize)])> = proteins
                .iter()
                .map(|p| (p.residues.residue_onehot.as_slice(), p.residues.edges.as_slice()))
                .collect();
            self.protein_3d.forward_batch(&g)?
        } else {
            self.zeros(n)?
        };
        Ok([t1, t2, t3])
    }

    /// Gather rows for each pair and concatenate into `(B, 6D)`.
    pub fn joint_features(drug: &ModalTriple, protein: &ModalTriple, pairs: &[(usize, usize)]) -> Result<Tensor> {
        let b = pairs.len();
        let di = Tensor::from_vec(pairs.iter().map(|p| p.0 as u32).collect::<Vec<_>>(), (b,), &device())?;
        let pi = Tensor::from_vec(pairs.iter().map(|p| p.1 as u32).collect::<Vec<_>>(), (b,), &device())?;
        let mut blocks = Vec::with_capacity(6);
        for t in drug {
            blocks.push(t.index_select(&di, 0)?);
        }
        for t in protein {
            blocks.push(t.index_select(&pi, 0)?);
        }
        Ok(Tensor::cat(&blocks, 1)?)
    }

    /// Forward pass over the unique entities of a batch. `pairs` index into
    /// `drugs` and `proteins`; `labels` align with `pairs`.
    pub fn forward(
        &self,
        drugs: &[&PreparedDrug],
        proteins: &[&PreparedProtein],
        pairs: &[(usize, usize)],
        labels: &[f64],
        variant: Variant,
        ctx: &mut ForwardCtx,
    ) -> Result<BatchOutput> {
        if pairs.len() != labels.len() || pairs.is_empty() {
            return Err(DtiError::Dimension(format!("{} pairs vs {} labels", pairs.len(), labels.len())));
        }
        let keep = variant.modalities();
        let weights = variant.weights(self.config.loss_weights());
        let pair_mask = variant.pairs();
        let dz = self.encode_drugs(drugs, keep, ctx)?;
        let pz = self.encode_proteins(proteins, keep, ctx)?;
        let f = Self::joint_features(&dz, &pz, pairs)?;
        let probs = self.classifier.forward(&f, ctx)?;
        let y = Tensor::from_vec(labels.to_vec(), (labels.len(),), &device())?;
        let cls = bce_loss(&y, &probs)?;

        let tau = self.config.temperature;
        let zero = Tensor::new(0f64, &device())?;
        let contrast = |z: &ModalTriple, w: f64| -> Result<Tensor> {
            if w == 0.0 || pair_mask.count() == 0 {
                return Ok(zero.clone());
            }
            trimodal_loss_masked(
                &ModalBatch {
                    z1: z[0].clone(),
                    z2: z[1].clone(),
                    z3: z[2].clone(),
                    tau,
                },
                pair_mask,
            )
        };
        let cl_drug = contrast(&dz, weights.beta)?;
        let cl_protein = contrast(&pz, weights.gamma)?;
        let total = weights.combine(&cls, &cl_drug, &cl_protein)?;
        Ok(BatchOutput {
            probs,
            cl_drug,
            cl_protein,
            cls,
            total,
        })
    }

    /// Inference-mode probabilities.
    pub fn predict(
        &self,
        drugs: &[&PreparedDrug],
        proteins: &[&PreparedProtein],
        pairs: &[(usize, usize)],
        variant: Variant,
    ) -> Result<Vec<f64>> {
        let mut ctx = ForwardCtx::eval();
        let keep = variant.modalities();
        let dz = self.encode_drugs(drugs, keep, &mut ctx)?;
        let pz = self.encode_proteins(proteins, keep, &mut ctx)?;
        let f = Self::joint_features(&dz, &pz, pairs)?;
        Ok(self.classifier.forward(&f, &mut ctx)?.to_vec1::<f64>()?)
    }
}
