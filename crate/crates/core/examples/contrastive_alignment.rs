//! The tri-modal contrastive objective on random and on aligned
//! embeddings, and the effect of masking modality pairs.

use candle_core::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use trimodal_dti::contrastive::{trimodal_loss, trimodal_loss_masked, ModalBatch, PairMask, DEFAULT_TEMPERATURE};
use trimodal_dti::nn::tensor2;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> trimodal_dti::Result<Tensor> {
    let m: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    tensor2(&m, cols)
}

pub fn run_example() -> trimodal_dti::Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, d) = (16, 32);
    let z1 = random(n, d, &mut rng)?;
    let z2 = random(n, d, &mut rng)?;
    let z3 = random(n, d, &mut rng)?;
    let random_loss = trimodal_loss(&ModalBatch {
        z1,
        z2,
        z3,
        tau: DEFAULT_TEMPERATURE,
    })?
    .to_scalar::<f64>()?;

    // Three noisy views of the same latent vectors.
    let base = random(n, d, &mut rng)?;
    let view = |rng: &mut ChaCha8Rng| -> trimodal_dti::Result<Tensor> {
        Ok((&base + (random(n, d, rng)? * 0.1)?)?)
    };
    let (a1, a2, a3) = (view(&mut rng)?, view(&mut rng)?, view(&mut rng)?);
    let aligned = ModalBatch {
        z1: a1,
        z2: a2,
        z3: a3,
        tau: DEFAULT_TEMPERATURE,
    };
    let aligned_loss = trimodal_loss(&aligned)?.to_scalar::<f64>()?;
    println!("random embeddings:  {random_loss:.4}");
    println!("aligned embeddings: {aligned_loss:.4}");

    let only_12 = PairMask {
        l12: true,
        l23: false,
        l13: false,
    };
    println!(
        "aligned, first pair only: {:.4}",
        trimodal_loss_masked(&aligned, only_12)?.to_scalar::<f64>()?
    );
    Ok((random_loss, aligned_loss))
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    run_example().map(|_| ())
}
