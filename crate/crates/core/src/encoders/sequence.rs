//! Pre-norm transformer encoder over embedded token sequences, with a
//! masked-mean readout.

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};
use crate::nn::{device, softmax_last, ForwardCtx, LayerNorm, Linear, ParamStore};
use crate::tokenizer::TokenSequence;

/// Additive attention bias for padded keys. Large enough that `exp`
/// underflows to exactly zero in f64.
const MASK_BIAS: f64 = -1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformerParams {
    pub num_layers: usize,
    pub num_heads: usize,
    pub model_dim: usize,
    pub feedforward_dim: usize,
    pub dropout: f64,
}

impl Default for TransformerParams {
    fn default() -> Self {
        TransformerParams {
            num_layers: 2,
            num_heads: 4,
            model_dim: 128,
            feedforward_dim: 512,
            dropout: 0.2,
        }
    }
}

impl TransformerParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_heads == 0 || !self.model_dim.is_multiple_of(self.num_heads) {
            return Err(DtiError::Config(format!(
                "model_dim {} not divisible by num_heads {}",
                self.model_dim, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(DtiError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct EncoderLayer {
    ln_attn: LayerNorm,
    q: Linear,
    k: Linear,
    v: Linear,
    out: Linear,
    ln_ff: LayerNorm,
    ff_in: Linear,
    ff_out: Linear,
}

#[derive(Debug, Clone)]
pub struct TransformerEncoder {
    params: TransformerParams,
    layers: Vec<EncoderLayer>,
    final_ln: LayerNorm,
}

impl TransformerEncoder {
    pub fn new(store: &mut ParamStore, name: &str, params: TransformerParams) -> Result<Self> {
        params.validate()?;
        let d = params.model_dim;
        let layers = (0..params.num_layers)
            .map(|l| {
                let p = format!("{name}.layer{l}");
                Ok(EncoderLayer {
                    ln_attn: LayerNorm::new(store, &format!("{p}.ln_attn"), d)?,
                    q: Linear::new(store, &format!("{p}.q"), d, d, true)?,
                    k: Linear::new(store, &format!("{p}.k"), d, d, true)?,
                    v: Linear::new(store, &format!("{p}.v"), d, d, true)?,
                    out: Linear::new(store, &format!("{p}.out"), d, d, true)?,
                    ln_ff: LayerNorm::new(store, &format!("{p}.ln_ff"), d)?,
                    ff_in: Linear::new(store, &format!("{p}.ff_in"), d, params.feedforward_dim, true)?,
                    ff_out: Linear::new(store, &format!("{p}.ff_out"), params.feedforward_dim, d, true)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransformerEncoder {
            params,
            layers,
            final_ln: LayerNorm::new(store, &format!("{name}.final_ln"), d)?,
        })
    }

    pub fn params(&self) -> &TransformerParams {
        &self.params
    }

    /// Encode a `(B, L, model_dim)` batch. `mask[b][i]` is true for real
    /// tokens; padded keys are never attended to.
    pub fn forward(&self, x: &Tensor, mask: &[Vec<bool>], ctx: &mut ForwardCtx) -> Result<Tensor> {
        let (b, l, d) = x.dims3()?;
        if d != self.params.model_dim {
            return Err(DtiError::Dimension(format!("input dim {d}, encoder dim {}", self.params.model_dim)));
        }
        if mask.len() != b || mask.iter().any(|m| m.len() != l) {
            return Err(DtiError::Dimension("mask shape does not match input".into()));
        }
        if mask.iter().any(|m| !m.iter().any(|&v| v)) {
            return Err(DtiError::Invalid("sequence with every position masked".into()));
        }
        let bias: Vec<f64> = mask
            .iter()
            .flat_map(|m| m.iter().map(|&v| if v { 0.0 } else { MASK_BIAS }))
            .collect();
        let bias = Tensor::from_vec(bias, (b, 1, 1, l), &device())?;

        let h = self.params.num_heads;
        let dh = d / h;
        let scale = 1.0 / (dh as f64).sqrt();
        let p = self.params.dropout;
        let mut x = x.clone();
        for layer in &self.layers {
            let y = layer.ln_attn.forward(&x)?;
            let split = |t: Tensor| -> Result<Tensor> {
                Ok(t.reshape((b, l, h, dh))?.transpose(1, 2)?.contiguous()?)
            };
            let q = split(layer.q.forward(&y)?)?;
            let k = split(layer.k.forward(&y)?)?;
            let v = split(layer.v.forward(&y)?)?;
            let scores = (q.matmul(&k.transpose(2, 3)?.contiguous()?)? * scale)?.broadcast_add(&bias)?;
            let attn = ctx.dropout(&softmax_last(&scores)?, p)?;
            let ctxv = attn.matmul(&v)?.transpose(1, 2)?.contiguous()?.reshape((b, l, d))?;
            x = (x + ctx.dropout(&layer.out.forward(&ctxv)?, p)?)?;

            let y = layer.ln_ff.forward(&x)?;
            let y = layer.ff_in.forward(&y)?.relu()?;
            let y = layer.ff_out.forward(&ctx.dropout(&y, p)?)?;
            x = (x + ctx.dropout(&y, p)?)?;
        }
        self.final_ln.forward(&x)
    }
}

/// Single-sequence form of [`TransformerEncoder::forward`]: `(l x d)` in,
/// `(l x d)` out.
pub fn transformer_encode(
    encoder: &TransformerEncoder,
    embedded: &Tensor,
    mask: &[bool],
    ctx: &mut ForwardCtx,
) -> Result<Tensor> {
    let out = encoder.forward(&embedded.unsqueeze(0)?, &[mask.to_vec()], ctx)?;
    Ok(out.squeeze(0)?)
}

/// Masked mean over positions of a `(B, L, d)` tensor.
pub fn masked_mean(encoded: &Tensor, mask: &[Vec<bool>]) -> Result<Tensor> {
    let (b, l, _) = encoded.dims3()?;
    let counts: Vec<f64> = mask.iter().map(|m| m.iter().filter(|&&v| v).count() as f64).collect();
    if counts.contains(&0.0) {
        return Err(DtiError::Invalid("pooling over a fully masked sequence".into()));
    }
    let w: Vec<f64> = mask
        .iter()
        .zip(&counts)
        .flat_map(|(m, &c)| m.iter().map(move |&v| if v { 1.0 / c } else { 0.0 }))
        .collect();
    let w = Tensor::from_vec(w, (b, l, 1), &device())?;
    Ok(encoded.broadcast_mul(&w)?.sum(1)?)
}

/// Full sequence branch: token tables, transformer, masked mean and the
/// projection to the shared embedding width.
#[derive(Debug, Clone)]
pub struct SequenceEncoder {
    pub content: Tensor,
    pub position: Tensor,
    pub encoder: TransformerEncoder,
    pub projection: Linear,
    pub max_len: usize,
}

impl SequenceEncoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        vocab_size: usize,
        max_len: usize,
        params: TransformerParams,
        out_dim: usize,
    ) -> Result<Self> {
        let d = params.model_dim;
        Ok(SequenceEncoder {
            content: store.normal(&format!("{name}.content"), &[vocab_size, d], 0.1)?,
            position: store.normal(&format!("{name}.position"), &[max_len, d], 0.1)?,
            encoder: TransformerEncoder::new(store, &format!("{name}.transformer"), params)?,
            projection: Linear::new(store, &format!("{name}.projection"), d, out_dim, true)?,
            max_len,
        })
    }

    /// Embedding lookup for a padded batch: `(B, L, d)`.
    pub fn embed(&self, seqs: &[&TokenSequence]) -> Result<(Tensor, Vec<Vec<bool>>)> {
        let width = seqs.iter().map(|s| s.len().min(self.max_len)).max().unwrap_or(0).max(1);
        let mut ids = Vec::with_capacity(seqs.len() * width);
        let mut masks = Vec::with_capacity(seqs.len());
        let vocab = self.content.dims()[0];
        for s in seqs {
            let (p, m) = s.padded(width);
            if let Some(&bad) = p.iter().find(|&&i| i as usize >= vocab) {
                return Err(DtiError::Bounds {
                    what: "token id",
                    index: bad as usize,
                    size: vocab,
                });
            }
            ids.extend(p);
            masks.push(m);
        }
        let ids = Tensor::from_vec(ids, (seqs.len() * width,), &device())?;
        let d = self.content.dims()[1];
        let content = self.content.index_select(&ids, 0)?.reshape((seqs.len(), width, d))?;
        let pos = self.position.narrow(0, 0, width)?.unsqueeze(0)?;
        Ok((content.broadcast_add(&pos)?, masks))
    }

    /// `(B, out_dim)` sequence embeddings.
    pub fn forward(&self, seqs: &[&TokenSequence], ctx: &mut ForwardCtx) -> Result<Tensor> {
        let (x, mask) = self.embed(seqs)?;
        let h = self.encoder.forward(&x, &mask, ctx)?;
        self.projection.forward(&masked_mean(&h, &mask)?)
    }
}

/// Pool an already-encoded `(l x d)` sequence into one vector and project.
pub fn pool_sequence(encoded: &Tensor, mask: &[bool], projection: &Linear) -> Result<Tensor> {
    let pooled = masked_mean(&encoded.unsqueeze(0)?, &[mask.to_vec()])?;
    Ok(projection.forward(&pooled)?.squeeze(0)?)
}
