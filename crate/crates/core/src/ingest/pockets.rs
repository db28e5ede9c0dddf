//! Binding-pocket graphs over protein atoms.
//!
//! Pocket membership comes from a JSON file
//! (`{"pockets": [{"atom_serials": [..]}, ..]}`, optionally
//! `{"residues": [..]}` entries). Without a file, one pocket spanning the
//! protein's heavy atoms is emitted.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{pocket_atom_features, PocketAtomDescriptor, POCKET_FEATURE_DIM};
use super::geometry::{neighbor_pairs, Vec3};
use super::pdb::{PdbAtom, PdbStructure};
use crate::error::{DtiError, Result};

pub const COVALENT_FALLBACK_CUTOFF: f64 = 2.0;
pub const DEFAULT_POCKET_ATOM_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocketGraph {
    /// `M x 31`
    pub node_features: Vec<Vec<f64>>,
    /// Undirected, `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl PocketGraph {
    pub fn num_atoms(&self) -> usize {
        self.node_features.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        super::mol2d::dense_adjacency(self.num_atoms(), &self.edges)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PocketSpec {
    #[serde(default)]
    pub atom_serials: Vec<u32>,
    #[serde(default)]
    pub residues: Vec<i32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PocketFile {
    pub pockets: Vec<PocketSpec>,
}

/// Ring atoms of aromatic side chains.
fn is_aromatic_atom(res: &str, name: &str) -> bool {
    match res {
        "PHE" | "TYR" => matches!(name, "CG" | "CD1" | "CD2" | "CE1" | "CE2" | "CZ"),
        "TRP" => matches!(
            name,
            "CG" | "CD1" | "CD2" | "NE1" | "CE2" | "CE3" | "CZ2" | "CZ3" | "CH2"
        ),
        "HIS" => matches!(name, "CG" | "ND1" | "CD2" | "CE1" | "NE2"),
        _ => false,
    }
}

fn default_valence(element: &str) -> u32 {
    match element {
        "C" => 4,
        "N" => 3,
        "O" | "S" | "Se" => 2,
        "P" => 3,
        "F" | "Cl" | "Br" | "I" | "H" => 1,
        _ => 0,
    }
}

/// Covalent neighbour lists for all atoms of a structure: CONECT records
/// when the file has them, otherwise a distance threshold.
fn covalent_neighbors(structure: &PdbStructure) -> Vec<Vec<usize>> {
    let n = structure.atoms.len();
    let mut nbrs = vec![Vec::new(); n];
    if !structure.conect.is_empty() {
        let by_serial: HashMap<u32, usize> = structure
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.serial, i))
            .collect();
        for &(a, b) in &structure.conect {
            if let (Some(&i), Some(&j)) = (by_serial.get(&a), by_serial.get(&b)) {
                nbrs[i].push(j);
                nbrs[j].push(i);
            }
        }
    } else {
        let coords: Vec<Vec3> = structure.atoms.iter().map(|a| a.coords).collect();
        for (i, j) in neighbor_pairs(&coords, COVALENT_FALLBACK_CUTOFF, |d| d < COVALENT_FALLBACK_CUTOFF) {
            nbrs[i].push(j);
            nbrs[j].push(i);
        }
    }
    nbrs
}

fn describe_atom(structure: &PdbStructure, nbrs: &[Vec<usize>], i: usize) -> PocketAtomDescriptor {
    let atom: &PdbAtom = &structure.atoms[i];
    let heavy = nbrs[i].iter().filter(|&&j| !structure.atoms[j].is_hydrogen()).count() as u32;
    let explicit_h = nbrs[i].iter().filter(|&&j| structure.atoms[j].is_hydrogen()).count() as u32;
    let has_hydrogens = structure.atoms.iter().any(PdbAtom::is_hydrogen);
    let aromatic = is_aromatic_atom(&atom.res_name, &atom.name);
    let (implicit, total_h) = if has_hydrogens {
        (0, explicit_h)
    } else {
        let used = heavy + u32::from(aromatic);
        let implicit = default_valence(&atom.element).saturating_sub(used);
        (implicit, implicit)
    };
    PocketAtomDescriptor {
        element: atom.element.clone(),
        degree: heavy,
        total_hydrogens: total_h,
        implicit_valence: implicit,
        aromatic,
    }
}

fn pocket_from_atoms(structure: &PdbStructure, nbrs: &[Vec<usize>], members: &[usize]) -> PocketGraph {
    let local: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let node_features = members
        .iter()
        .map(|&i| pocket_atom_features(&describe_atom(structure, nbrs, i)).to_vec())
        .collect::<Vec<_>>();
    debug_assert!(node_features.iter().all(|r| r.len() == POCKET_FEATURE_DIM));
    let mut edges = BTreeSet::new();
    for (a, &i) in members.iter().enumerate() {
        for j in &nbrs[i] {
            if let Some(&b) = local.get(j) {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    PocketGraph {
        node_features,
        edges: edges.into_iter().collect(),
    }
}

/// Single pocket over heavy protein atoms, truncated at a residue
/// boundary once `cap` atoms are reached.
pub fn fallback_pocket(structure: &PdbStructure, cap: usize) -> Result<PocketGraph> {
    let heavy: Vec<(usize, &PdbAtom)> = structure.heavy_protein_atoms().collect();
    if heavy.is_empty() {
        return Err(DtiError::Invalid("structure has no heavy protein atoms".into()));
    }
    let mut members = Vec::new();
    let mut k = 0;
    while k < heavy.len() {
        let key = heavy[k].1.residue_key();
        let mut end = k;
        while end < heavy.len() && heavy[end].1.residue_key() == key {
            end += 1;
        }
        if members.len() + (end - k) > cap {
            if members.is_empty() {
                members.extend(heavy[k..k + cap].iter().map(|(i, _)| *i));
            }
            break;
        }
        members.extend(heavy[k..end].iter().map(|(i, _)| *i));
        k = end;
    }
    let nbrs = covalent_neighbors(structure);
    Ok(pocket_from_atoms(structure, &nbrs, &members))
}

pub fn pockets_from_spec(protein_id: &str, spec: &PocketFile, structure: &PdbStructure) -> Result<Vec<PocketGraph>> {
    let by_serial: HashMap<u32, usize> = structure
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.serial, i))
        .collect();
    let nbrs = covalent_neighbors(structure);
    let mut out = Vec::with_capacity(spec.pockets.len());
    for (p, pocket) in spec.pockets.iter().enumerate() {
        let mut members = Vec::new();
        for s in &pocket.atom_serials {
            let i = *by_serial.get(s).ok_or_else(|| {
                DtiError::integrity(protein_id, format!("pocket {p} references missing atom serial {s}"))
            })?;
            members.push(i);
        }
        for r in &pocket.residues {
            let before = members.len();
            members.extend(
                structure
                    .atoms
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.res_seq == *r && !a.is_hydrogen() && !a.hetero)
                    .map(|(i, _)| i),
            );
            if members.len() == before {
                return Err(DtiError::integrity(
                    protein_id,
                    format!("pocket {p} references missing residue {r}"),
                ));
            }
        }
        let mut seen = BTreeSet::new();
        members.retain(|i| seen.insert(*i));
        if members.is_empty() {
            return Err(DtiError::integrity(protein_id, format!("pocket {p} is empty")));
        }
        out.push(pocket_from_atoms(structure, &nbrs, &members));
    }
    Ok(out)
}

/// Pocket graphs for a protein; a missing `pocket_file` selects the
/// whole-protein fallback.
pub fn load_pockets(
    protein_id: &str,
    pocket_file: Option<&Path>,
    structure: &PdbStructure,
    cap: usize,
) -> Result<Vec<PocketGraph>> {
    match pocket_file {
        Some(path) if path.exists() => {
            let text = std::fs::read_to_string(path).map_err(|e| DtiError::io(path, e))?;
            let spec: PocketFile = serde_json::from_str(&text)
                .map_err(|e| DtiError::parse(path.display().to_string(), None, e.to_string()))?;
            pockets_from_spec(protein_id, &spec, structure)
        }
        _ => Ok(vec![fallback_pocket(structure, cap)?]),
    }
}
