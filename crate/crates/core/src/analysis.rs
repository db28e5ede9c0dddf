//! Case-study tooling: candidate ranking, cross-modal similarity
//! statistics and hyperparameter sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ModelConfig;
use crate::contrastive::cosine_sim;
use crate::dataset::{DatasetArchive, PreparedData};
use crate::error::{DtiError, Result};
use crate::harness::experiment::{run_experiment, splits_for, Summary};
use crate::model::{TriModalModel, Variant};
use crate::nn::{to_rows, ForwardCtx};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTarget {
    pub rank: usize,
    pub target_id: String,
    pub score: f64,
}

/// Sort `(id, score)` descending by score with ids ascending on ties, keep
/// the first `k` and number them from 1.
pub fn rank_scores(mut scored: Vec<(String, f64)>, k: usize) -> Vec<RankedTarget> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (id, score))| RankedTarget {
            rank: i + 1,
            target_id: id,
            score,
        })
        .collect()
}

fn resolve(ids: &[String], lookup: impl Fn(&str) -> Option<usize>, what: &str) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| lookup(id).ok_or_else(|| DtiError::Invalid(format!("unknown {what} id {id:?}"))))
        .collect()
}

/// Score every candidate protein against `drug_id`; an empty candidate
/// list means every protein in the data.
pub fn rank_targets(
    model: &TriModalModel,
    data: &PreparedData,
    drug_id: &str,
    candidates: &[String],
    k: usize,
) -> Result<Vec<RankedTarget>> {
    let d = data
        .drug_position(drug_id)
        .ok_or_else(|| DtiError::Invalid(format!("unknown drug id {drug_id:?}")))?;
    let ids: Vec<String> = if candidates.is_empty() {
        data.proteins.iter().map(|p| p.id.clone()).collect()
    } else {
        candidates.to_vec()
    };
    let pos = resolve(&ids, |id| data.protein_position(id), "target")?;
    let proteins: Vec<_> = pos.iter().map(|&i| &data.proteins[i]).collect();
    let pairs: Vec<(usize, usize)> = (0..proteins.len()).map(|j| (0, j)).collect();
    let scores = model.predict(&[&data.drugs[d]], &proteins, &pairs, Variant::All)?;
    Ok(rank_scores(ids.into_iter().zip(scores).collect(), k))
}

/// The reverse direction: candidate drugs for one target.
pub fn rank_drugs(
    model: &TriModalModel,
    data: &PreparedData,
    target_id: &str,
    candidates: &[String],
    k: usize,
) -> Result<Vec<RankedTarget>> {
    let p = data
        .protein_position(target_id)
        .ok_or_else(|| DtiError::Invalid(format!("unknown target id {target_id:?}")))?;
    let ids: Vec<String> = if candidates.is_empty() {
        data.drugs.iter().map(|d| d.id.clone()).collect()
    } else {
        candidates.to_vec()
    };
    let pos = resolve(&ids, |id| data.drug_position(id), "drug")?;
    let drugs: Vec<_> = pos.iter().map(|&i| &data.drugs[i]).collect();
    let pairs: Vec<(usize, usize)> = (0..drugs.len()).map(|j| (j, 0)).collect();
    let scores = model.predict(&drugs, &[&data.proteins[p]], &pairs, Variant::All)?;
    Ok(rank_scores(ids.into_iter().zip(scores).collect(), k))
}

/// CSV with header `rank,target_id,score`.
pub fn ranked_csv(rows: &[RankedTarget]) -> String {
    let mut s = String::from("rank,target_id,score\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.rank, r.target_id, r.score);
    }
    s
}

pub const HIST_BIN_WIDTH: f64 = 0.05;
pub const HIST_BINS: usize = 40;
pub const INSIDE_BAND: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSimilarity {
    /// For example `d1-d2`.
    pub pair: String,
    pub entity_ids: Vec<String>,
    pub similarities: Vec<f64>,
    /// Counts over `[-1, 1]` in bins of width 0.05; 1.0 falls in the last bin.
    pub histogram: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    pub inside_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub pairs: Vec<PairSimilarity>,
}

pub fn histogram(values: &[f64]) -> Vec<usize> {
    let mut h = vec![0; HIST_BINS];
    for &v in values {
        let b = ((v + 1.0) / HIST_BIN_WIDTH).floor();
        h[(b.max(0.0) as usize).min(HIST_BINS - 1)] += 1;
    }
    h
}

/// Per-entity cosine similarity between two modalities of the same
/// entities.
pub fn pair_similarity(pair: &str, ids: &[String], a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<PairSimilarity> {
    if ids.len() != a.len() || a.len() != b.len() || ids.is_empty() {
        return Err(DtiError::Dimension(format!("{} ids, {} and {} rows", ids.len(), a.len(), b.len())));
    }
    let sims = a.iter().zip(b).map(|(x, y)| cosine_sim(x, y)).collect::<Result<Vec<_>>>()?;
    let n = sims.len() as f64;
    let mean = sims.iter().sum::<f64>() / n;
    let std = (sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    let inside = sims.iter().filter(|s| s.abs() <= INSIDE_BAND).count() as f64 / n;
    Ok(PairSimilarity {
        pair: pair.to_string(),
        entity_ids: ids.to_vec(),
        histogram: histogram(&sims),
        similarities: sims,
        mean,
        std,
        inside_fraction: inside,
    })
}

/// The three within-entity modality pairs for a triple of embedding
/// matrices, labelled with `prefix` (`d` or `t`).
pub fn triple_similarity(prefix: char, ids: &[String], z: [&[Vec<f64>]; 3]) -> Result<Vec<PairSimilarity>> {
    [(0, 1), (1, 2), (0, 2)]
        .iter()
        .map(|&(i, j)| pair_similarity(&format!("{prefix}{}-{prefix}{}", i + 1, j + 1), ids, z[i], z[j]))
        .collect()
}

/// d1/d2/d3 and t1/t2/t3 for every entity in the data, inference mode.
pub fn modal_similarity(model: &TriModalModel, data: &PreparedData) -> Result<SimilarityReport> {
    let mut ctx = ForwardCtx::eval();
    let mut drug_rows: [Vec<Vec<f64>>; 3] = Default::default();
    for chunk in data.drugs.chunks(64) {
        let refs: Vec<_> = chunk.iter().collect();
        let z = model.encode_drugs(&refs, [true; 3], &mut ctx)?;
        for (k, t) in z.iter().enumerate() {
            drug_rows[k].extend(to_rows(t)?);
        }
    }
    let mut prot_rows: [Vec<Vec<f64>>; 3] = Default::default();
    for chunk in data.proteins.chunks(64) {
        let refs: Vec<_> = chunk.iter().collect();
        let z = model.encode_proteins(&refs, [true; 3], &mut ctx)?;
        for (k, t) in z.iter().enumerate() {
            prot_rows[k].extend(to_rows(t)?);
        }
    }
    let dids: Vec<String> = data.drugs.iter().map(|d| d.id.clone()).collect();
    let pids: Vec<String> = data.proteins.iter().map(|p| p.id.clone()).collect();
    let mut pairs = triple_similarity('d', &dids, [&drug_rows[0], &drug_rows[1], &drug_rows[2]])?;
    pairs.extend(triple_similarity('t', &pids, [&prot_rows[0], &prot_rows[1], &prot_rows[2]])?);
    Ok(SimilarityReport { pairs })
}

impl SimilarityReport {
    /// `pair,bin_lo,bin_hi,count` rows.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("pair,bin_lo,bin_hi,count\n");
        for p in &self.pairs {
            for (b, c) in p.histogram.iter().enumerate() {
                let lo = -1.0 + b as f64 * HIST_BIN_WIDTH;
                let _ = writeln!(s, "{},{:.2},{:.2},{}", p.pair, lo, lo + HIST_BIN_WIDTH, c);
            }
        }
        s
    }

    /// `pair,mean,std,inside_fraction,count` rows.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("pair,mean,std,inside_fraction,count\n");
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{}",
                p.pair,
                p.mean,
                p.std,
                p.inside_fraction,
                p.similarities.len()
            );
        }
        s
    }

    /// Static SVG: one histogram panel per modality pair, the
    /// `[-0.25, 0.25]` band shaded.
    pub fn render_svg(&self) -> String {
        let (pw, ph, pad) = (320.0, 180.0, 30.0);
        let cols = 3usize;
        let rows = self.pairs.len().div_ceil(cols).max(1);
        let (w, h) = (cols as f64 * (pw + pad) + pad, rows as f64 * (ph + 2.0 * pad) + pad);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (i, p) in self.pairs.iter().enumerate() {
            let x0 = pad + (i % cols) as f64 * (pw + pad);
            let y0 = pad + (i / cols) as f64 * (ph + 2.0 * pad);
            let max = *p.histogram.iter().max().unwrap_or(&1).max(&1) as f64;
            let bw = pw / HIST_BINS as f64;
            let band_x = x0 + (1.0 - INSIDE_BAND) / HIST_BIN_WIDTH * bw;
            let band_w = 2.0 * INSIDE_BAND / HIST_BIN_WIDTH * bw;
            let _ = writeln!(s, r##"<rect x="{band_x:.1}" y="{y0:.1}" width="{band_w:.1}" height="{ph}" fill="#eef"/>"##);
            for (b, &c) in p.histogram.iter().enumerate() {
                let bh = c as f64 / max * ph;
                let _ = writeln!(
                    s,
                    r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{bh:.1}" fill="#468"/>"##,
                    x0 + b as f64 * bw,
                    y0 + ph - bh,
                    bw - 1.0
                );
            }
            let _ = writeln!(
                s,
                r##"<line x1="{x0}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="black"/>"##,
                y0 + ph,
                x0 + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{x0}" y="{:.1}">{}  inside ±0.25: {:.2}</text>"#,
                y0 - 6.0,
                p.pair,
                p.inside_fraction
            );
            let _ = writeln!(s, r#"<text x="{x0}" y="{:.1}">-1</text>"#, y0 + ph + 14.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">0</text>"#, x0 + pw / 2.0 - 3.0, y0 + ph + 14.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">1</text>"#, x0 + pw - 6.0, y0 + ph + 14.0);
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Parameters a sweep may vary.
pub const SWEEP_KEYS: [&str; 4] = ["dropout", "learning_rate", "gcn_layers", "attention_heads"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Every combination of the listed values.
    Cartesian,
    /// Vary one axis at a time, other parameters at their config values.
    OneAtATime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: BTreeMap<String, Vec<Value>>,
    #[serde(default = "default_mode")]
    pub mode: SweepMode,
}

fn default_mode() -> SweepMode {
    SweepMode::Cartesian
}

impl SweepGrid {
    /// One axis per hyperparameter studied for sensitivity, bracketing the
    /// defaults.
    pub fn default_axes() -> Self {
        let mut axes = BTreeMap::new();
        axes.insert("dropout".into(), [0.1, 0.2, 0.3, 0.4, 0.5].map(Value::from).to_vec());
        axes.insert(
            "learning_rate".into(),
            [1e-4, 5e-4, 1e-3, 5e-3, 1e-2].map(Value::from).to_vec(),
        );
        axes.insert("gcn_layers".into(), [1, 2, 3, 4].map(Value::from).to_vec());
        axes.insert("attention_heads".into(), [1, 2, 4, 8].map(Value::from).to_vec());
        SweepGrid {
            axes,
            mode: SweepMode::OneAtATime,
        }
    }

    /// Grid points as ordered `(key, value)` assignments.
    pub fn points(&self) -> Result<Vec<Vec<(String, Value)>>> {
        if self.axes.is_empty() || self.axes.values().any(|v| v.is_empty()) {
            return Err(DtiError::Config("empty sweep grid".into()));
        }
        if let Some(k) = self.axes.keys().find(|k| !SWEEP_KEYS.contains(&k.as_str())) {
            return Err(DtiError::Config(format!("cannot sweep {k:?}; allowed: {}", SWEEP_KEYS.join(", "))));
        }
        Ok(match self.mode {
            SweepMode::OneAtATime => self
                .axes
                .iter()
                .flat_map(|(k, vs)| vs.iter().map(move |v| vec![(k.clone(), v.clone())]))
                .collect(),
            SweepMode::Cartesian => {
                let mut pts: Vec<Vec<(String, Value)>> = vec![vec![]];
                for (k, vs) in &self.axes {
                    pts = pts
                        .into_iter()
                        .flat_map(|p| {
                            vs.iter().map(move |v| {
                                let mut q = p.clone();
                                q.push((k.clone(), v.clone()));
                                q
                            })
                        })
                        .collect();
                }
                pts
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Vec<(String, Value)>,
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Train every grid point on the same splits and seeds.
pub fn sweep(config: &ModelConfig, archive: &DatasetArchive, grid: &SweepGrid) -> Result<SweepReport> {
    let points = grid.points()?;
    let splits = splits_for(archive, config)?;
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let mut cfg = config.clone();
        for (k, v) in &p {
            cfg = cfg.with_override(k, v)?;
        }
        let out = run_experiment(&cfg, archive, &splits, Variant::All)?;
        rows.push(SweepRow {
            params: p,
            summary: out.report.summary,
        });
    }
    Ok(SweepReport { rows })
}

impl SweepReport {
    /// `parameter,value,auc,auc_std,aupr,aupr_std,precision,precision_std`;
    /// multi-parameter points join names and values with `;`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("parameter,value,auc,auc_std,aupr,aupr_std,precision,precision_std\n");
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for r in &self.rows {
            let names: Vec<&str> = r.params.iter().map(|(k, _)| k.as_str()).collect();
            let values: Vec<String> = r.params.iter().map(|(_, v)| v.to_string()).collect();
            let (a, b, c) = match &r.summary {
                Some(sm) => (sm.auc, sm.aupr, sm.precision),
                None => {
                    let _ = writeln!(s, "{},{},,,,,,", names.join(";"), values.join(";"));
                    continue;
                }
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                names.join(";"),
                values.join(";"),
                fmt(Some(a.mean)),
                fmt(a.std),
                fmt(Some(b.mean)),
                fmt(b.std),
                fmt(Some(c.mean)),
                fmt(c.std)
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_breaks_ties_by_id() {
        let r = rank_scores(
            vec![("b".into(), 0.5), ("a".into(), 0.5), ("c".into(), 0.9)],
            10,
        );
        let ids: Vec<&str> = r.iter().map(|x| x.target_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(r[2].rank, 3);
        assert_eq!(rank_scores(vec![("x".into(), 0.9), ("y".into(), 0.3)], 1)[0].target_id, "x");
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[-1.0, 1.0, 0.0, -0.01]);
        assert_eq!(h.iter().sum::<usize>(), 4);
        assert_eq!((h[0], h[39], h[20], h[19]), (1, 1, 1, 1));
    }

    #[test]
    fn grid_enumeration() {
        let mut axes = BTreeMap::new();
        axes.insert("dropout".to_string(), vec![Value::from(0.1), Value::from(0.2)]);
        let g = SweepGrid {
            axes,
            mode: SweepMode::Cartesian,
        };
        assert_eq!(g.points().unwrap().len(), 2);
        assert_eq!(SweepGrid::default_axes().points().unwrap().len(), 18);
        let empty = SweepGrid {
            axes: BTreeMap::new(),
            mode: SweepMode::Cartesian,
        };
        assert!(empty.points().is_err());
    }
}
