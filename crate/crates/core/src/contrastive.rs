//! Cross-modal contrastive alignment over three modalities of one entity
//! type (drugs or proteins).

use candle_core::Tensor;

use crate::error::{DtiError, Result};
use crate::nn::device;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

pub fn cosine_sim(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(DtiError::Dimension(format!("vectors of length {} and {}", x.len(), y.len())));
    }
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(DtiError::Invalid("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

fn normalize_rows(z: &Tensor) -> Result<Tensor> {
    let norms = z.sqr()?.sum_keepdim(1)?.sqrt()?;
    let values = norms.flatten_all()?.to_vec1::<f64>()?;
    if let Some(i) = values.iter().position(|&n| !(n > 0.0) || !n.is_finite()) {
        return Err(DtiError::Invalid(format!("row {i} has zero or non-finite norm")));
    }
    Ok(z.broadcast_div(&norms)?)
}

/// One direction: `-(1/2)(1/N) Σ_i log[e^{s_ii^{ab}} / (Σ_j e^{s_ij^{ab}} + Σ_{j≠i} e^{s_ij^{aa}})]`
/// with similarities already divided by τ.
fn directional(za: &Tensor, zb: &Tensor, tau: f64, off_diag: &Tensor) -> Result<Tensor> {
    let n = za.dims()[0];
    // Cosines are bounded by 1, so subtracting 1/τ keeps every exponent <= 0.
    let shift = 1.0 / tau;
    let s_ab = ((za.matmul(&zb.t()?)? / tau)? - shift)?;
    let s_aa = ((za.matmul(&za.t()?)? / tau)? - shift)?;
    let denom = (s_ab.exp()?.sum(1)? + s_aa.exp()?.mul(off_diag)?.sum(1)?)?;
    let pos = s_ab.mul(&Tensor::eye(n, crate::nn::DTYPE, &device())?)?.sum(1)?;
    let per = (pos - denom.log()?)?;
    Ok((per.mean_all()? * -0.5)?)
}

/// `L_CL^a + L_CL^b` for row-aligned `Za`, `Zb` (N x D).
pub fn pairwise_contrastive_loss(za: &Tensor, zb: &Tensor, tau: f64) -> Result<Tensor> {
    if !(tau > 0.0) {
        return Err(DtiError::Config(format!("temperature must be positive, got {tau}")));
    }
    let (n, d) = za.dims2()?;
    if zb.dims2()? != (n, d) {
        return Err(DtiError::Dimension(format!("{:?} vs {:?}", za.dims(), zb.dims())));
    }
    if n == 0 {
        return Err(DtiError::Invalid("contrastive loss over an empty batch".into()));
    }
    let za = normalize_rows(za)?;
    let zb = normalize_rows(zb)?;
    let eye = Tensor::eye(n, crate::nn::DTYPE, &device())?;
    let off = (eye.ones_like()? - eye)?;
    Ok((directional(&za, &zb, tau, &off)? + directional(&zb, &za, tau, &off)?)?)
}

/// Three row-aligned modality matrices of the same entities.
#[derive(Debug, Clone)]
pub struct ModalBatch {
    pub z1: Tensor,
    pub z2: Tensor,
    pub z3: Tensor,
    pub tau: f64,
}

/// Which of the pair terms `(1,2)`, `(2,3)`, `(1,3)` participate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairMask {
    pub l12: bool,
    pub l23: bool,
    pub l13: bool,
}

impl PairMask {
    pub const ALL: PairMask = PairMask {
        l12: true,
        l23: true,
        l13: true,
    };

    pub fn count(&self) -> usize {
        self.l12 as usize + self.l23 as usize + self.l13 as usize
    }
}

/// Mean of the three pairwise losses.
pub fn trimodal_loss(batch: &ModalBatch) -> Result<Tensor> {
    trimodal_loss_masked(batch, PairMask::ALL)
}

/// Mean over the enabled pair terms; zero when none are enabled.
pub fn trimodal_loss_masked(batch: &ModalBatch, mask: PairMask) -> Result<Tensor> {
    let mut terms = Vec::new();
    if mask.l12 {
        terms.push(pairwise_contrastive_loss(&batch.z1, &batch.z2, batch.tau)?);
    }
    if mask.l23 {
        terms.push(pairwise_contrastive_loss(&batch.z2, &batch.z3, batch.tau)?);
    }
    if mask.l13 {
        terms.push(pairwise_contrastive_loss(&batch.z1, &batch.z3, batch.tau)?);
    }
    if terms.is_empty() {
        return Ok(Tensor::new(0f64, &device())?);
    }
    let k = terms.len() as f64;
    let sum = terms.into_iter().reduce(|a, b| (a + b).expect("scalar add")).expect("non-empty");
    Ok((sum / k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor2;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_sim(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert!(cosine_sim(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn single_sample_loss_is_zero() {
        let a = tensor2(&[vec![0.3, -1.0, 2.0]], 3).unwrap();
        let b = tensor2(&[vec![1.0, 1.0, 0.5]], 3).unwrap();
        let l = pairwise_contrastive_loss(&a, &b, 0.1).unwrap().to_scalar::<f64>().unwrap();
        assert!(l.abs() < 1e-12, "{l}");
    }

    #[test]
    fn zero_row_rejected() {
        let a = tensor2(&[vec![0.0, 0.0], vec![1.0, 0.0]], 2).unwrap();
        assert!(pairwise_contrastive_loss(&a, &a, 1.0).is_err());
    }
}
