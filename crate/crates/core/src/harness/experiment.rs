//! Repeated runs over splits, ablation tables and report rendering.

use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, SplitScheme};
use crate::dataset::{DatasetArchive, PreparedData, Vocabularies};
use crate::error::{DtiError, Result};
use crate::harness::checkpoint::Checkpoint;
use crate::harness::metrics::Metrics;
use crate::harness::splits::{fixed_split, make_splits, DatasetSplit};
use crate::harness::train::{train, RunReport};
use crate::model::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; only defined for two or more runs.
    pub std: Option<f64>,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() >= 2)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Some(MeanStd { mean, std })
    }

    pub fn display(&self) -> String {
        match self.std {
            Some(s) => format!("{:.3} ± {:.3}", self.mean, s),
            None => format!("{:.3}", self.mean),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub auc: MeanStd,
    pub aupr: MeanStd,
    pub precision: MeanStd,
}

impl Summary {
    pub fn of(metrics: &[Metrics]) -> Option<Self> {
        Some(Summary {
            runs: metrics.len(),
            auc: MeanStd::of(&metrics.iter().map(|m| m.auc).collect::<Vec<_>>())?,
            aupr: MeanStd::of(&metrics.iter().map(|m| m.aupr).collect::<Vec<_>>())?,
            precision: MeanStd::of(&metrics.iter().map(|m| m.precision).collect::<Vec<_>>())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub dataset: String,
    pub variant: Variant,
    pub config: ModelConfig,
    pub runs: Vec<RunReport>,
    /// Test metrics over all runs with defined metrics.
    pub summary: Option<Summary>,
}

/// Splits for an archive under the configured scheme.
pub fn splits_for(archive: &DatasetArchive, config: &ModelConfig) -> Result<Vec<DatasetSplit>> {
    match config.split_scheme {
        SplitScheme::GpcrFixed => {
            let f = archive
                .fixed_split
                .as_ref()
                .ok_or_else(|| DtiError::Config("archive has no fixed train/test split".into()))?;
            Ok(vec![fixed_split(&f.train, &f.test, config.seed)?])
        }
        scheme => make_splits(archive.samples.len(), scheme, config.seed, config.repeats),
    }
}

/// Result of [`run_experiment`]: the report plus the checkpoint of the
/// run with the best validation AUC.
pub struct ExperimentOutput {
    pub report: TrainReport,
    pub best: Option<Checkpoint>,
}

/// `config.runs` seeded runs per split, vocabularies trained on each
/// split's training part.
pub fn run_experiment(
    config: &ModelConfig,
    archive: &DatasetArchive,
    splits: &[DatasetSplit],
    variant: Variant,
) -> Result<ExperimentOutput> {
    let mut runs = Vec::new();
    let mut best: Option<(f64, Checkpoint)> = None;
    for (si, split) in splits.iter().enumerate() {
        let vocabs = Vocabularies::train_on(archive, &split.train, config)?;
        let data = PreparedData::new(archive, vocabs, config)?;
        for r in 0..config.runs {
            let seed = config.seed.wrapping_add((si * config.runs + r) as u64);
            log::info!("{} split {si} run {r} (seed {seed})", variant.name());
            let (report, model) = train(config, split, &data, variant, seed)?;
            let score = report.val_metrics.map_or(f64::NEG_INFINITY, |m| m.auc);
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                let ck = Checkpoint::capture(
                    &model,
                    &data.vocabs,
                    variant,
                    seed,
                    report.rng_state,
                    report.best_epoch,
                    Some(split.clone()),
                    &archive.name,
                )?;
                best = Some((score, ck));
            }
            runs.push(report);
        }
    }
    let tests: Vec<Metrics> = runs.iter().filter_map(|r| r.test_metrics).collect();
    Ok(ExperimentOutput {
        report: TrainReport {
            dataset: archive.name.clone(),
            variant,
            config: config.clone(),
            summary: Summary::of(&tests),
            runs,
        },
        best: best.map(|b| b.1),
    })
}

/// One experiment per variant under identical config, seeds and splits.
pub fn run_ablation(
    config: &ModelConfig,
    archive: &DatasetArchive,
    variants: &[Variant],
) -> Result<Vec<TrainReport>> {
    if variants.is_empty() {
        return Err(DtiError::Config("no ablation variants requested".into()));
    }
    let splits = splits_for(archive, config)?;
    variants
        .iter()
        .map(|&v| Ok(run_experiment(config, archive, &splits, v)?.report))
        .collect()
}

pub fn parse_variants(list: &str) -> Result<Vec<Variant>> {
    list.split(',').map(|s| s.trim().parse()).collect()
}

/// Aligned text table: Dataset / Variant / AUC / AUPR / Precision.
pub fn format_table(reports: &[TrainReport]) -> String {
    let header = ["Dataset", "Variant", "AUC", "AUPR", "Precision"].map(String::from);
    let mut rows = vec![header.to_vec()];
    for r in reports {
        let cells = match &r.summary {
            Some(s) => [s.auc.display(), s.aupr.display(), s.precision.display()],
            None => ["n/a".to_string(), "n/a".to_string(), "n/a".to_string()],
        };
        rows.push(vec![
            r.dataset.clone(),
            r.variant.name().to_string(),
            cells[0].clone(),
            cells[1].clone(),
            cells[2].clone(),
        ]);
    }
    let widths: Vec<usize> = (0..5)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_only_for_two_or_more() {
        assert_eq!(MeanStd::of(&[0.8]).unwrap().std, None);
        let m = MeanStd::of(&[0.8, 0.9]).unwrap();
        assert!((m.mean - 0.85).abs() < 1e-12);
        assert!((m.std.unwrap() - (0.005f64).sqrt()).abs() < 1e-12);
        assert_eq!(MeanStd { mean: 0.87, std: Some(0.015) }.display(), "0.870 ± 0.015");
    }

    #[test]
    fn variant_names_parse() {
        assert_eq!(parse_variants("all, no_CL").unwrap(), vec![Variant::All, Variant::NoCl]);
        assert!(parse_variants("bogus").is_err());
    }
}
