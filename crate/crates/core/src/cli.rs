//! Command-line surface. The `trimod` binary only calls [`main_with`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{self, SweepGrid};
use crate::config::ModelConfig;
use crate::dataset::{preprocess_dir, DatasetArchive, PreparedData, Vocabularies};
use crate::error::{DtiError, Result};
use crate::harness::checkpoint::Checkpoint;
use crate::harness::experiment::{format_table, parse_variants, run_ablation, run_experiment, splits_for};
use crate::harness::train::evaluate_indices;
use crate::model::Variant;

#[derive(Debug, Parser)]
#[command(name = "trimod", version, about = "Tri-modal drug-target interaction prediction")]
pub struct Cli {
    /// JSON or TOML file with ModelConfig fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw dataset directory into a binary archive.
    Preprocess {
        #[arg(long)]
        data: PathBuf,
    },
    /// Train drug and protein vocabularies on the first split's training part.
    TrainVocab(DatasetArg),
    /// Train the model; writes report.json, report.txt and checkpoint.bin.
    Train {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long, default_value = "all")]
        variant: String,
    },
    /// Evaluate a checkpoint on its stored test split (or every sample).
    Evaluate {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Score every sample instead of the checkpoint's test split.
        #[arg(long)]
        all: bool,
    },
    /// Train several variants under identical splits and seeds.
    Ablate {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long, default_value = "all,no_CL,no_L12,no_L23,no_L13,seq_only,graph_only,struct3d_only")]
        variants: String,
    },
    /// Hyperparameter grid sweep.
    Sweep {
        #[command(flatten)]
        data: DatasetArg,
        /// JSON or TOML grid `{axes = {dropout = [..]}, mode = "cartesian"}`;
        /// omitted means the default one-at-a-time grid.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Rank candidate targets for a drug, or candidate drugs for a target.
    RankTargets {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        drug: Option<String>,
        #[arg(long)]
        target: Option<String>,
        /// Comma-separated candidate ids; defaults to every entity.
        #[arg(long = "targets", alias = "candidates", value_delimiter = ',')]
        candidates: Vec<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Cross-modal cosine similarity histograms.
    ModalSimilarity {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DatasetArg {
    /// Archive written by `preprocess`.
    #[arg(long)]
    pub dataset: PathBuf,
}

fn load_config(cli: &Cli) -> Result<ModelConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ModelConfig::load(p)?,
        None => ModelConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| DtiError::io(dir, e))?;
    let p = dir.join(name);
    std::fs::write(&p, contents).map_err(|e| DtiError::io(&p, e))?;
    Ok(p)
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

/// Checkpoint, its model and the archive prepared with its vocabularies.
fn load_trained(
    checkpoint: &Path,
    dataset: &Path,
) -> Result<(Checkpoint, crate::model::TriModalModel, DatasetArchive, PreparedData)> {
    let ck = Checkpoint::load(checkpoint)?;
    let (model, vocabs) = ck.restore_model()?;
    let archive = DatasetArchive::load(dataset)?;
    let data = PreparedData::new(&archive, vocabs, &model.config)?;
    Ok((ck, model, archive, data))
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = &cli.out;
    match &cli.command {
        Command::Preprocess { data } => {
            let cfg = load_config(cli)?;
            let (archive, manifest) = preprocess_dir(data, cfg.pocket_atom_cap)?;
            std::fs::create_dir_all(out).map_err(|e| DtiError::io(out, e))?;
            archive.save(&out.join("dataset.bin"))?;
            write(out, "skipped.json", json(&manifest)?)?;
            println!(
                "{}: {} drugs, {} proteins, {} samples ({} skipped)",
                archive.name,
                archive.drugs.len(),
                archive.proteins.len(),
                archive.samples.len(),
                manifest.skipped.len()
            );
        }
        Command::TrainVocab(d) => {
            let cfg = load_config(cli)?;
            let archive = DatasetArchive::load(&d.dataset)?;
            let split = splits_for(&archive, &cfg)?.remove(0);
            let v = Vocabularies::train_on(&archive, &split.train, &cfg)?;
            std::fs::create_dir_all(out).map_err(|e| DtiError::io(out, e))?;
            v.drug.save(&out.join("drug_vocab.json"))?;
            v.protein.save(&out.join("protein_vocab.json"))?;
            println!("drug vocabulary {} tokens, protein vocabulary {} tokens", v.drug.len(), v.protein.len());
        }
        Command::Train { data, variant } => {
            let cfg = load_config(cli)?;
            let variant: Variant = variant.parse()?;
            let archive = DatasetArchive::load(&data.dataset)?;
            let splits = splits_for(&archive, &cfg)?;
            let res = run_experiment(&cfg, &archive, &splits, variant)?;
            write(out, "report.json", json(&res.report)?)?;
            let table = format_table(std::slice::from_ref(&res.report));
            write(out, "report.txt", &table)?;
            if let Some(ck) = &res.best {
                std::fs::create_dir_all(out).map_err(|e| DtiError::io(out, e))?;
                ck.save(&out.join("checkpoint.bin"))?;
            }
            print!("{table}");
        }
        Command::Evaluate { data, checkpoint, all } => {
            let (ck, model, _, prepared) = load_trained(checkpoint, &data.dataset)?;
            let indices: Vec<usize> = match (&ck.split, all) {
                (Some(s), false) => s.test.clone(),
                _ => (0..prepared.samples.len()).collect(),
            };
            if let Some(&bad) = indices.iter().find(|&&i| i >= prepared.samples.len()) {
                return Err(DtiError::Bounds {
                    what: "sample",
                    index: bad,
                    size: prepared.samples.len(),
                });
            }
            let (metrics, loss) = evaluate_indices(&model, &prepared, &indices, ck.variant, model.config.threshold)?;
            let metrics = metrics.ok_or_else(|| DtiError::UndefinedMetric("evaluation set has a single class".into()))?;
            let body = serde_json::json!({ "samples": indices.len(), "loss": loss, "metrics": metrics });
            write(out, "metrics.json", serde_json::to_string_pretty(&body)?)?;
            println!(
                "AUC {:.4}  AUPR {:.4}  Precision {:.4}  ({} samples)",
                metrics.auc,
                metrics.aupr,
                metrics.precision,
                indices.len()
            );
        }
        Command::Ablate { data, variants } => {
            let cfg = load_config(cli)?;
            let variants = parse_variants(variants)?;
            let archive = DatasetArchive::load(&data.dataset)?;
            let reports = run_ablation(&cfg, &archive, &variants)?;
            let table = format_table(&reports);
            write(out, "ablation.json", json(&reports)?)?;
            write(out, "ablation.txt", &table)?;
            print!("{table}");
        }
        Command::Sweep { data, grid } => {
            let cfg = load_config(cli)?;
            let grid = match grid {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| DtiError::io(p, e))?;
                    if p.extension().is_some_and(|e| e == "toml") {
                        toml::from_str::<SweepGrid>(&text).map_err(|e| DtiError::Config(e.to_string()))?
                    } else {
                        serde_json::from_str::<SweepGrid>(&text).map_err(|e| DtiError::Config(e.to_string()))?
                    }
                }
                None => SweepGrid::default_axes(),
            };
            let archive = DatasetArchive::load(&data.dataset)?;
            let report = analysis::sweep(&cfg, &archive, &grid)?;
            let csv = report.to_csv();
            write(out, "sweep.csv", &csv)?;
            write(out, "sweep.json", json(&report)?)?;
            print!("{csv}");
        }
        Command::RankTargets {
            data,
            checkpoint,
            drug,
            target,
            candidates,
            k,
        } => {
            let (_, model, _, prepared) = load_trained(checkpoint, &data.dataset)?;
            let rows = match (drug, target) {
                (Some(d), _) => analysis::rank_targets(&model, &prepared, d, candidates, *k)?,
                (None, Some(t)) => analysis::rank_drugs(&model, &prepared, t, candidates, *k)?,
                (None, None) => return Err(DtiError::Invalid("either --drug or --target is required".into())),
            };
            let csv = analysis::ranked_csv(&rows);
            write(out, "ranked.csv", &csv)?;
            print!("{csv}");
        }
        Command::ModalSimilarity { data, checkpoint } => {
            let (_, model, _, prepared) = load_trained(checkpoint, &data.dataset)?;
            let report = analysis::modal_similarity(&model, &prepared)?;
            write(out, "similarity_hist.csv", report.histogram_csv())?;
            write(out, "similarity_summary.csv", report.summary_csv())?;
            write(out, "similarity.svg", report.render_svg())?;
            write(out, "similarity.json", json(&report)?)?;
            print!("{}", report.summary_csv());
        }
    }
    Ok(())
}

/// Parse arguments, run, and map errors to a one-line diagnostic and exit
/// code. Usage errors exit with 2 through clap.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: kind={} msg={}", e.kind(), e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
