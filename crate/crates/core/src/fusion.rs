//! Joint feature construction, the interaction MLP and the loss terms.

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};
use crate::nn::{device, sigmoid, ForwardCtx, Linear, ParamStore};

pub const PROB_EPS: f64 = 1e-7;
/// sigmoid(±36) is still strictly inside (0, 1) in f64.
pub const LOGIT_LIMIT: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Seq,
    Graph2d,
    Struct3d,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Seq, Modality::Graph2d, Modality::Struct3d];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Seq => "seq",
            Modality::Graph2d => "graph2d",
            Modality::Struct3d => "struct3d",
        }
    }
}

/// One fixed-width representation of one entity in one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalEmbedding {
    pub entity_id: String,
    pub modality: Modality,
    pub vector: Vec<f64>,
}

impl ModalEmbedding {
    pub fn new(entity_id: impl Into<String>, modality: Modality, vector: Vec<f64>) -> Result<Self> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(DtiError::Invalid("non-finite embedding entry".into()));
        }
        Ok(ModalEmbedding {
            entity_id: entity_id.into(),
            modality,
            vector,
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// `F = d1 ⊕ d2 ⊕ d3 ⊕ t1 ⊕ t2 ⊕ t3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFeature {
    pub values: Vec<f64>,
    pub block_dim: usize,
}

impl JointFeature {
    pub fn block(&self, k: usize) -> &[f64] {
        &self.values[k * self.block_dim..(k + 1) * self.block_dim]
    }
}

pub fn fuse(parts: [&ModalEmbedding; 6]) -> Result<JointFeature> {
    let d = parts[0].dim();
    if d == 0 {
        return Err(DtiError::Dimension("zero-width embedding".into()));
    }
    if let Some(p) = parts.iter().find(|p| p.dim() != d) {
        return Err(DtiError::Dimension(format!(
            "{} embedding of {} has width {}, expected {d}",
            p.modality.name(),
            p.entity_id,
            p.dim()
        )));
    }
    Ok(JointFeature {
        values: parts.iter().flat_map(|p| p.vector.iter().copied()).collect(),
        block_dim: d,
    })
}

#[derive(Debug, Clone)]
pub struct FusionMlp {
    pub fc1: Linear,
    pub fc2: Linear,
    pub fc3: Linear,
    pub dropout: f64,
}

impl FusionMlp {
    pub fn new(store: &mut ParamStore, name: &str, in_dim: usize, h1: usize, h2: usize, dropout: f64) -> Result<Self> {
        Ok(FusionMlp {
            fc1: Linear::new(store, &format!("{name}.fc1"), in_dim, h1, true)?,
            fc2: Linear::new(store, &format!("{name}.fc2"), h1, h2, true)?,
            fc3: Linear::new(store, &format!("{name}.fc3"), h2, 1, true)?,
            dropout,
        })
    }

    /// `(B, 6D)` to `(B)` probabilities.
    pub fn forward(&self, f: &Tensor, ctx: &mut ForwardCtx) -> Result<Tensor> {
        let h = self.fc1.forward(f)?.relu()?;
        let h = self.fc2.forward(&ctx.dropout(&h, self.dropout)?)?.relu()?;
        let logit = self.fc3.forward(&ctx.dropout(&h, self.dropout)?)?;
        Ok(sigmoid(&logit.clamp(-LOGIT_LIMIT, LOGIT_LIMIT)?)?.squeeze(1)?)
    }
}

pub fn mlp_predict(f: &JointFeature, mlp: &FusionMlp) -> Result<f64> {
    if f.values.len() != mlp.fc1.in_dim() {
        return Err(DtiError::Dimension(format!(
            "joint feature of width {}, classifier expects {}",
            f.values.len(),
            mlp.fc1.in_dim()
        )));
    }
    let x = Tensor::from_vec(f.values.clone(), (1, f.values.len()), &device())?;
    Ok(mlp.forward(&x, &mut ForwardCtx::eval())?.to_vec1::<f64>()?[0])
}

/// Mean binary cross-entropy with probabilities clamped to `[ε, 1-ε]`.
pub fn bce_loss(y: &Tensor, y_hat: &Tensor) -> Result<Tensor> {
    if y.dims() != y_hat.dims() {
        return Err(DtiError::Dimension(format!("labels {:?} vs predictions {:?}", y.dims(), y_hat.dims())));
    }
    let p = y_hat.clamp(PROB_EPS, 1.0 - PROB_EPS)?;
    let pos = y.mul(&p.log()?)?;
    let neg = y.affine(-1.0, 1.0)?.mul(&p.affine(-1.0, 1.0)?.log()?)?;
    Ok(((pos + neg)?.mean_all()? * -1.0)?)
}

pub fn bce_loss_values(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(DtiError::Dimension(format!("{} labels vs {} predictions", y.len(), y_hat.len())));
    }
    let s: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(&t, &p)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            t * p.ln() + (1.0 - t) * (1.0 - p).ln()
        })
        .sum();
    Ok(-s / y.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 1.0,
            beta: 0.1,
            gamma: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.alpha, self.beta, self.gamma];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().all(|&v| v == 0.0) {
            return Err(DtiError::Config(format!("invalid loss weights {w:?}")));
        }
        Ok(())
    }

    pub fn combine(&self, cls: &Tensor, cl_d: &Tensor, cl_p: &Tensor) -> Result<Tensor> {
        Ok(((cls * self.alpha)? + (cl_d * self.beta)? + (cl_p * self.gamma)?)?)
    }
}

pub fn total_loss(cls: f64, cl_d: f64, cl_p: f64, w: &LossWeights) -> f64 {
    w.alpha * cls + w.beta * cl_d + w.gamma * cl_p
}
