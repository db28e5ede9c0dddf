use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("tsv") => TableFormat::Tsv,
            _ => TableFormat::Csv,
        }
    }
}

/// One labeled drug–protein pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionSample {
    pub drug_id: String,
    pub protein_id: String,
    pub label: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionTable {
    pub samples: Vec<InteractionSample>,
    pub drug_smiles: BTreeMap<String, String>,
    pub protein_sequences: BTreeMap<String, String>,
}

impl InteractionTable {
    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.samples.len() - self.positives()
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    drug_id: String,
    smiles: String,
    protein_id: String,
    sequence: String,
    label: String,
}

fn parse_label(raw: &str) -> Option<u8> {
    match raw.trim() {
        "1" | "1.0" => Some(1),
        "0" | "0.0" => Some(0),
        _ => None,
    }
}

/// Upper-case a protein sequence, mapping non-standard letters to `X`.
pub fn normalize_sequence(seq: &str) -> Option<String> {
    const STANDARD: &str = "ACDEFGHIKLMNPQRSTVWY";
    let mut out = String::with_capacity(seq.len());
    for c in seq.trim().chars() {
        if !c.is_ascii_alphabetic() {
            return None;
        }
        let u = c.to_ascii_uppercase();
        out.push(if STANDARD.contains(u) { u } else { 'X' });
    }
    (!out.is_empty()).then_some(out)
}

pub fn load_interactions(path: &Path, format: TableFormat) -> Result<InteractionTable> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| DtiError::io(path, e))?;
    parse_interactions(&text, format, &name)
}

pub fn parse_interactions(text: &str, format: TableFormat, source_name: &str) -> Result<InteractionTable> {
    let delimiter = match format {
        TableFormat::Csv => b',',
        TableFormat::Tsv => b'\t',
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut table = InteractionTable::default();
    let mut labels: HashMap<(String, String), u8> = HashMap::new();
    for (k, rec) in reader.deserialize::<Row>().enumerate() {
        // Row numbers count the header as row 1.
        let row_no = k + 2;
        let row = rec.map_err(|e| DtiError::parse(source_name, Some(row_no), e.to_string()))?;
        if row.drug_id.is_empty() || row.protein_id.is_empty() {
            return Err(DtiError::parse(source_name, Some(row_no), "empty identifier"));
        }
        if row.smiles.is_empty() {
            return Err(DtiError::parse(source_name, Some(row_no), "empty SMILES"));
        }
        let label = parse_label(&row.label).ok_or_else(|| {
            DtiError::parse(source_name, Some(row_no), format!("label {:?} is not 0/1", row.label))
        })?;
        let seq = normalize_sequence(&row.sequence)
            .ok_or_else(|| DtiError::parse(source_name, Some(row_no), "invalid protein sequence"))?;

        if let Some(prev) = table.drug_smiles.get(&row.drug_id) {
            if *prev != row.smiles {
                return Err(DtiError::integrity(&row.drug_id, format!("conflicting SMILES at row {row_no}")));
            }
        } else {
            table.drug_smiles.insert(row.drug_id.clone(), row.smiles.clone());
        }
        if let Some(prev) = table.protein_sequences.get(&row.protein_id) {
            if *prev != seq {
                return Err(DtiError::integrity(&row.protein_id, format!("conflicting sequence at row {row_no}")));
            }
        } else {
            table.protein_sequences.insert(row.protein_id.clone(), seq);
        }

        let key = (row.drug_id.clone(), row.protein_id.clone());
        if let Some(&prev) = labels.get(&key) {
            if prev != label {
                return Err(DtiError::integrity(
                    format!("{}/{}", key.0, key.1),
                    format!("conflicting duplicate label at row {row_no}"),
                ));
            }
        }
        labels.insert(key, label);
        table.samples.push(InteractionSample {
            drug_id: row.drug_id,
            protein_id: row.protein_id,
            label,
        });
    }
    if table.samples.is_empty() {
        return Err(DtiError::parse(source_name, None, "no data rows"));
    }
    Ok(table)
}

/// Serialize a table with the canonical header.
pub fn write_interactions(table: &InteractionTable, format: TableFormat) -> Result<String> {
    let delimiter = match format {
        TableFormat::Csv => b',',
        TableFormat::Tsv => b'\t',
    };
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    w.write_record(["drug_id", "smiles", "protein_id", "sequence", "label"])
        .map_err(|e| DtiError::Serde(e.to_string()))?;
    for s in &table.samples {
        let smiles = &table.drug_smiles[&s.drug_id];
        let seq = &table.protein_sequences[&s.protein_id];
        w.write_record([&s.drug_id, smiles, &s.protein_id, seq, &s.label.to_string()])
            .map_err(|e| DtiError::Serde(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| DtiError::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| DtiError::Serde(e.to_string()))
}
