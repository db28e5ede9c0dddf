//! Preprocessed dataset archives and the tokenised, model-ready view of
//! them.
//!
//! A raw dataset directory holds:
//!
//! ```text
//! interactions.csv            (or .tsv; or train.csv + test.csv for a fixed split)
//! conformers/<drug_id>.sdf
//! structures/<protein_id>.pdb
//! pockets/<protein_id>.json   (optional per protein)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};
use crate::ingest::interactions::{load_interactions, InteractionSample, InteractionTable, TableFormat};
use crate::ingest::mol3d::conformer_graph_for_drug;
use crate::ingest::pdb::{parse_pdb, residue_graph};
use crate::ingest::{load_pockets, smiles_to_2d_graph, DrugRecord, ProteinRecord, DRUG_EDGE_CUTOFF, RESIDUE_EDGE_CUTOFF};
use crate::model::{PreparedDrug, PreparedProtein};
use crate::tokenizer::{tokenize, train_vocab, Vocabulary};

const ARCHIVE_MAGIC: &[u8; 8] = b"TRIMODDS";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetArchive {
    pub name: String,
    pub drugs: Vec<DrugRecord>,
    pub proteins: Vec<ProteinRecord>,
    pub samples: Vec<InteractionSample>,
    pub fixed_split: Option<FixedIndices>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub kind: String,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipManifest {
    pub skipped: Vec<SkipEntry>,
    pub samples_in: usize,
    pub samples_kept: usize,
    pub drugs_kept: usize,
    pub proteins_kept: usize,
}

impl DatasetArchive {
    pub fn drug_index(&self) -> HashMap<&str, usize> {
        self.drugs.iter().enumerate().map(|(i, d)| (d.drug_id.as_str(), i)).collect()
    }

    pub fn protein_index(&self) -> HashMap<&str, usize> {
        self.proteins.iter().enumerate().map(|(i, p)| (p.protein_id.as_str(), i)).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
        out.extend(bincode::serialize(self)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], source: &str) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != ARCHIVE_MAGIC {
            return Err(DtiError::parse(source, None, "not a dataset archive"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != ARCHIVE_VERSION {
            return Err(DtiError::parse(source, None, format!("archive version {version}, expected {ARCHIVE_VERSION}")));
        }
        let a: DatasetArchive = bincode::deserialize(&bytes[12..])?;
        a.validate()?;
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| DtiError::io(path, e))?;
        f.write_all(&self.to_bytes()?).map_err(|e| DtiError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| DtiError::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }

    /// Every sample resolves to a record with all three modalities.
    pub fn validate(&self) -> Result<()> {
        let di = self.drug_index();
        let pi = self.protein_index();
        for s in &self.samples {
            if !di.contains_key(s.drug_id.as_str()) {
                return Err(DtiError::integrity(&s.drug_id, "sample references unknown drug"));
            }
            if !pi.contains_key(s.protein_id.as_str()) {
                return Err(DtiError::integrity(&s.protein_id, "sample references unknown protein"));
            }
            if s.label > 1 {
                return Err(DtiError::integrity(&s.drug_id, format!("label {}", s.label)));
            }
        }
        for d in &self.drugs {
            if d.graph3d.is_none() {
                return Err(DtiError::integrity(&d.drug_id, "missing 3D graph"));
            }
        }
        for p in &self.proteins {
            if p.residue_graph.is_none() || p.pockets.is_empty() {
                return Err(DtiError::integrity(&p.protein_id, "missing structure or pockets"));
            }
        }
        if let Some(f) = &self.fixed_split {
            let n = self.samples.len();
            if f.train.iter().chain(&f.test).any(|&i| i >= n) {
                return Err(DtiError::integrity("fixed split", "index out of range"));
            }
        }
        Ok(())
    }
}

fn find_table(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["csv", "tsv"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.exists())
}

fn merge_tables(parts: &[&InteractionTable]) -> Result<InteractionTable> {
    let mut out = InteractionTable::default();
    for t in parts {
        for (k, v) in &t.drug_smiles {
            if let Some(prev) = out.drug_smiles.insert(k.clone(), v.clone()) {
                if prev != *v {
                    return Err(DtiError::integrity(k, "conflicting SMILES across tables"));
                }
            }
        }
        for (k, v) in &t.protein_sequences {
            if let Some(prev) = out.protein_sequences.insert(k.clone(), v.clone()) {
                if prev != *v {
                    return Err(DtiError::integrity(k, "conflicting sequence across tables"));
                }
            }
        }
        out.samples.extend(t.samples.iter().cloned());
    }
    Ok(out)
}

/// Parse a raw dataset directory. Entities with missing or unparseable
/// files are skipped and listed; integrity violations abort.
pub fn preprocess_dir(data_dir: &Path, pocket_atom_cap: usize) -> Result<(DatasetArchive, SkipManifest)> {
    let (table, fixed_sizes) = if let Some(p) = find_table(data_dir, "interactions") {
        (load_interactions(&p, TableFormat::from_path(&p))?, None)
    } else {
        let train = find_table(data_dir, "train");
        let test = find_table(data_dir, "test");
        match (train, test) {
            (Some(tr), Some(te)) => {
                let a = load_interactions(&tr, TableFormat::from_path(&tr))?;
                let b = load_interactions(&te, TableFormat::from_path(&te))?;
                let n_train = a.samples.len();
                (merge_tables(&[&a, &b])?, Some(n_train))
            }
            _ => {
                return Err(DtiError::io(
                    data_dir.join("interactions.csv"),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no interactions or train/test table"),
                ))
            }
        }
    };

    let mut manifest = SkipManifest {
        samples_in: table.samples.len(),
        ..Default::default()
    };
    let mut skip = |kind: &str, id: &str, reason: String| {
        log::info!("skipping {kind} {id}: {reason}");
        manifest.skipped.push(SkipEntry {
            kind: kind.into(),
            id: id.into(),
            reason,
        });
    };

    let mut drugs = Vec::new();
    for (id, smiles) in &table.drug_smiles {
        let graph2d = match smiles_to_2d_graph(smiles) {
            Ok(g) => g,
            Err(e) => {
                skip("drug", id, e.to_string());
                continue;
            }
        };
        let sdf = data_dir.join("conformers").join(format!("{id}.sdf"));
        let Ok(block) = std::fs::read_to_string(&sdf) else {
            skip("drug", id, "missing conformer file".into());
            continue;
        };
        let graph3d = match conformer_graph_for_drug(id, &graph2d, &block, DRUG_EDGE_CUTOFF) {
            Ok(g) => g,
            Err(e @ DtiError::Integrity { .. }) => return Err(e),
            Err(e) => {
                skip("drug", id, e.to_string());
                continue;
            }
        };
        drugs.push(DrugRecord {
            drug_id: id.clone(),
            smiles: smiles.clone(),
            graph2d,
            graph3d: Some(graph3d),
        });
    }

    let mut proteins = Vec::new();
    for (id, seq) in &table.protein_sequences {
        let pdb_path = data_dir.join("structures").join(format!("{id}.pdb"));
        let Ok(text) = std::fs::read_to_string(&pdb_path) else {
            skip("protein", id, "missing structure file".into());
            continue;
        };
        let name = pdb_path.display().to_string();
        let parsed = parse_pdb(&text, &name).and_then(|s| {
            let g = residue_graph(&s, RESIDUE_EDGE_CUTOFF, &name)?;
            Ok((s, g))
        });
        let (structure, residues) = match parsed {
            Ok(v) => v,
            Err(e) => {
                skip("protein", id, e.to_string());
                continue;
            }
        };
        let pocket_path = data_dir.join("pockets").join(format!("{id}.json"));
        let pockets = match load_pockets(id, Some(&pocket_path), &structure, pocket_atom_cap) {
            Ok(p) => p,
            Err(e @ DtiError::Integrity { .. }) => return Err(e),
            Err(e) => {
                skip("protein", id, e.to_string());
                continue;
            }
        };
        proteins.push(ProteinRecord {
            protein_id: id.clone(),
            sequence: seq.clone(),
            pockets,
            residue_graph: Some(residues),
        });
    }

    let kept_d: BTreeSet<&str> = drugs.iter().map(|d| d.drug_id.as_str()).collect();
    let kept_p: BTreeSet<&str> = proteins.iter().map(|p| p.protein_id.as_str()).collect();
    let mut samples = Vec::new();
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, s) in table.samples.iter().enumerate() {
        if kept_d.contains(s.drug_id.as_str()) && kept_p.contains(s.protein_id.as_str()) {
            remap.insert(i, samples.len());
            samples.push(s.clone());
        }
    }
    let fixed_split = fixed_sizes.map(|n_train| {
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (&old, &new) in &remap {
            if old < n_train {
                train.push(new);
            } else {
                test.push(new);
            }
        }
        FixedIndices { train, test }
    });
    manifest.samples_kept = samples.len();
    manifest.drugs_kept = drugs.len();
    manifest.proteins_kept = proteins.len();
    if samples.is_empty() {
        return Err(DtiError::Invalid("no complete samples remain after cleaning".into()));
    }
    let name = data_dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let archive = DatasetArchive {
        name,
        drugs,
        proteins,
        samples,
        fixed_split,
    };
    archive.validate()?;
    Ok((archive, manifest))
}

/// Drug and protein vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabularies {
    pub drug: Vocabulary,
    pub protein: Vocabulary,
}

impl Vocabularies {
    /// Train both vocabularies on the entities referenced by `train`
    /// sample indices only.
    pub fn train_on(archive: &DatasetArchive, train: &[usize], cfg: &crate::config::ModelConfig) -> Result<Self> {
        let di = archive.drug_index();
        let pi = archive.protein_index();
        let mut drugs = BTreeSet::new();
        let mut prots = BTreeSet::new();
        for &i in train {
            let s = archive
                .samples
                .get(i)
                .ok_or(DtiError::Bounds {
                    what: "sample index",
                    index: i,
                    size: archive.samples.len(),
                })?;
            drugs.insert(di[s.drug_id.as_str()]);
            prots.insert(pi[s.protein_id.as_str()]);
        }
        let dc: Vec<String> = drugs.iter().map(|&i| archive.drugs[i].smiles.clone()).collect();
        let pc: Vec<String> = prots.iter().map(|&i| archive.proteins[i].sequence.clone()).collect();
        Ok(Vocabularies {
            drug: train_vocab(&dc, cfg.drug_vocab_size, cfg.min_pair_freq)?,
            protein: train_vocab(&pc, cfg.protein_vocab_size, cfg.min_pair_freq)?,
        })
    }
}

/// Model-ready dataset: every entity tokenised, samples as index triples.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub drugs: Vec<PreparedDrug>,
    pub proteins: Vec<PreparedProtein>,
    /// `(drug index, protein index, label)` aligned with the archive samples.
    pub samples: Vec<(usize, usize, u8)>,
    pub vocabs: Vocabularies,
}

impl PreparedData {
    pub fn new(archive: &DatasetArchive, vocabs: Vocabularies, cfg: &crate::config::ModelConfig) -> Result<Self> {
        archive.validate()?;
        let drugs = archive
            .drugs
            .iter()
            .map(|d| {
                Ok(PreparedDrug {
                    id: d.drug_id.clone(),
                    tokens: tokenize(&d.smiles, &vocabs.drug, cfg.drug_max_len)?,
                    graph2d: d.graph2d.clone(),
                    graph3d: d.graph3d.clone().expect("validated"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let proteins = archive
            .proteins
            .iter()
            .map(|p| {
                Ok(PreparedProtein {
                    id: p.protein_id.clone(),
                    tokens: tokenize(&p.sequence, &vocabs.protein, cfg.protein_max_len)?,
                    pockets: p.pockets.clone(),
                    residues: p.residue_graph.clone().expect("validated"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let di = archive.drug_index();
        let pi = archive.protein_index();
        let samples = archive
            .samples
            .iter()
            .map(|s| (di[s.drug_id.as_str()], pi[s.protein_id.as_str()], s.label))
            .collect();
        Ok(PreparedData {
            drugs,
            proteins,
            samples,
            vocabs,
        })
    }

    pub fn drug_position(&self, id: &str) -> Option<usize> {
        self.drugs.iter().position(|d| d.id == id)
    }

    pub fn protein_position(&self, id: &str) -> Option<usize> {
        self.proteins.iter().position(|p| p.id == id)
    }
}
