//! Mini-batch training with validation-AUC model selection.

use std::collections::HashMap;

use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::dataset::PreparedData;
use crate::error::{DtiError, Result};
use crate::fusion::bce_loss_values;
use crate::harness::metrics::{compute_metrics, Metrics};
use crate::harness::splits::DatasetSplit;
use crate::model::{PreparedDrug, PreparedProtein, TriModalModel, Variant};
use crate::nn::ForwardCtx;

const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_cls_loss: f64,
    pub val_loss: f64,
    pub train_metrics: Option<Metrics>,
    pub val_metrics: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub train_metrics: Option<Metrics>,
    pub val_metrics: Option<Metrics>,
    pub test_metrics: Option<Metrics>,
    pub stopped_early: bool,
    /// Dropout generator `(seed, stream position)` after the last step.
    pub rng_state: (u64, u128),
}

/// The distinct entities of a set of samples and local pair indices.
pub struct BatchView<'a> {
    pub drugs: Vec<&'a PreparedDrug>,
    pub proteins: Vec<&'a PreparedProtein>,
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<f64>,
}

pub fn batch_view<'a>(data: &'a PreparedData, indices: &[usize]) -> BatchView<'a> {
    let mut dmap: HashMap<usize, usize> = HashMap::new();
    let mut pmap: HashMap<usize, usize> = HashMap::new();
    let mut v = BatchView {
        drugs: Vec::new(),
        proteins: Vec::new(),
        pairs: Vec::with_capacity(indices.len()),
        labels: Vec::with_capacity(indices.len()),
    };
    for &i in indices {
        let (d, p, y) = data.samples[i];
        let dl = *dmap.entry(d).or_insert_with(|| {
            v.drugs.push(&data.drugs[d]);
            v.drugs.len() - 1
        });
        let pl = *pmap.entry(p).or_insert_with(|| {
            v.proteins.push(&data.proteins[p]);
            v.proteins.len() - 1
        });
        v.pairs.push((dl, pl));
        v.labels.push(y as f64);
    }
    v
}

/// Inference over sample indices, in order.
pub fn predict_indices(model: &TriModalModel, data: &PreparedData, indices: &[usize], variant: Variant) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let v = batch_view(data, chunk);
        out.extend(model.predict(&v.drugs, &v.proteins, &v.pairs, variant)?);
    }
    Ok(out)
}

/// Metrics and BCE on a subset; metrics are `None` when a class is absent.
pub fn evaluate_indices(
    model: &TriModalModel,
    data: &PreparedData,
    indices: &[usize],
    variant: Variant,
    threshold: f64,
) -> Result<(Option<Metrics>, f64)> {
    if indices.is_empty() {
        return Ok((None, f64::NAN));
    }
    let scores = predict_indices(model, data, indices, variant)?;
    let labels: Vec<u8> = indices.iter().map(|&i| data.samples[i].2).collect();
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let loss = bce_loss_values(&y, &scores)?;
    let metrics = match compute_metrics(&labels, &scores, threshold) {
        Ok(m) => Some(m),
        Err(DtiError::UndefinedMetric(msg)) => {
            log::warn!("{msg}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok((metrics, loss))
}

/// Dropout stream seed derived from the run seed.
pub fn dropout_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_5EED
}

/// Train one model on `split` and evaluate the restored best epoch.
pub fn train(
    config: &ModelConfig,
    split: &DatasetSplit,
    data: &PreparedData,
    variant: Variant,
    seed: u64,
) -> Result<(RunReport, TriModalModel)> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(DtiError::Invalid("empty training split".into()));
    }
    let model = TriModalModel::new(config, data.vocabs.drug.len(), data.vocabs.protein.len(), seed)?;
    let mut opt = AdamW::new(
        model.store.all_vars(),
        ParamsAdamW {
            lr: config.learning_rate,
            weight_decay: config.weight_decay,
            ..Default::default()
        },
    )?;
    let mut ctx = ForwardCtx::train(dropout_seed(seed));
    let mut order = split.train.clone();
    let mut records = Vec::new();
    let mut best: Option<(f64, usize, _)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 0..config.epochs {
        order.clone_from(&split.train);
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(epoch as u64 + 1)));
        let (mut loss_sum, mut cls_sum, mut seen) = (0.0, 0.0, 0usize);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let v = batch_view(data, chunk);
            let out = model.forward(&v.drugs, &v.proteins, &v.pairs, &v.labels, variant, &mut ctx)?;
            let total = out.total.to_scalar::<f64>()?;
            if !total.is_finite() {
                return Err(DtiError::Training(format!(
                    "non-finite loss {total} at epoch {epoch}, batch {b} (cls {}, drug CL {}, protein CL {})",
                    out.cls.to_scalar::<f64>()?,
                    out.cl_drug.to_scalar::<f64>()?,
                    out.cl_protein.to_scalar::<f64>()?
                )));
            }
            opt.backward_step(&out.total)?;
            loss_sum += total * chunk.len() as f64;
            cls_sum += out.cls.to_scalar::<f64>()? * chunk.len() as f64;
            seen += chunk.len();
        }
        let (train_m, _) = evaluate_indices(&model, data, &split.train, variant, config.threshold)?;
        let (val_m, val_loss) = evaluate_indices(&model, data, &split.val, variant, config.threshold)?;
        let score = match val_m {
            Some(m) => m.auc,
            // Without a usable validation set the latest epoch wins.
            None if val_loss.is_nan() => epoch as f64,
            None => -val_loss,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} val_auc {}",
            loss_sum / seen as f64,
            val_m.map_or("n/a".to_string(), |m| format!("{:.4}", m.auc))
        );
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / seen as f64,
            train_cls_loss: cls_sum / seen as f64,
            val_loss,
            train_metrics: train_m,
            val_metrics: val_m,
        });
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, epoch, model.store.snapshot()?));
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience > 0 && since_best >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let best_epoch = match &best {
        Some((_, e, snap)) => {
            model.store.restore(snap)?;
            Some(*e)
        }
        None => None,
    };
    let (train_metrics, _) = evaluate_indices(&model, data, &split.train, variant, config.threshold)?;
    let (val_metrics, _) = evaluate_indices(&model, data, &split.val, variant, config.threshold)?;
    let (test_metrics, _) = evaluate_indices(&model, data, &split.test, variant, config.threshold)?;
    Ok((
        RunReport {
            variant,
            seed,
            epochs: records,
            best_epoch,
            train_metrics,
            val_metrics,
            test_metrics,
            stopped_early,
            rng_state: ctx.rng_state(),
        },
        model,
    ))
}
