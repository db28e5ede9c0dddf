//! Minimal PDB reader: ATOM/HETATM coordinates, names, residues, serials
//! and CONECT records. Everything else is skipped.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::features::{residue_onehot, RESIDUE_FEATURE_DIM};
use super::geometry::{neighbor_pairs, Vec3};
use crate::error::{DtiError, Result};

pub const RESIDUE_EDGE_CUTOFF: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PdbAtom {
    pub serial: u32,
    pub name: String,
    pub res_name: String,
    pub chain: char,
    pub res_seq: i32,
    pub insertion: char,
    pub coords: Vec3,
    pub element: String,
    pub hetero: bool,
}

impl PdbAtom {
    pub fn residue_key(&self) -> (char, i32, char) {
        (self.chain, self.res_seq, self.insertion)
    }

    pub fn is_hydrogen(&self) -> bool {
        self.element == "H" || self.element == "D"
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PdbStructure {
    pub atoms: Vec<PdbAtom>,
    /// CONECT bonds by serial, `a < b`.
    pub conect: Vec<(u32, u32)>,
}

impl PdbStructure {
    pub fn heavy_protein_atoms(&self) -> impl Iterator<Item = (usize, &PdbAtom)> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.hetero && !a.is_hydrogen())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueContactGraph {
    /// `R x 21`
    pub residue_onehot: Vec<Vec<f64>>,
    pub calpha_coords: Vec<Vec3>,
    /// Undirected contacts, `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl ResidueContactGraph {
    pub fn num_residues(&self) -> usize {
        self.calpha_coords.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        super::mol2d::dense_adjacency(self.num_residues(), &self.edges)
    }
}

fn element_from_name(name: &str) -> String {
    let letters: String = name.chars().filter(|c| c.is_ascii_alphabetic()).collect();
    letters.chars().next().map(|c| c.to_string()).unwrap_or_default()
}

fn normalize_element(raw: &str) -> String {
    let mut c = raw.trim().chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + &c.as_str().to_ascii_lowercase(),
        None => String::new(),
    }
}

pub fn parse_pdb(text: &str, source_name: &str) -> Result<PdbStructure> {
    let mut atoms = Vec::new();
    let mut conect = Vec::new();
    let mut seen: HashSet<((char, i32, char), String)> = HashSet::new();
    for (k, line) in text.lines().enumerate() {
        let row = k + 1;
        let record = line.get(0..6).unwrap_or(line).trim_end();
        match record {
            "ATOM" | "HETATM" => {
                let num = |r: std::ops::Range<usize>, what: &str| -> Result<f64> {
                    line.get(r)
                        .and_then(|s| s.trim().parse::<f64>().ok())
                        .ok_or_else(|| DtiError::parse(source_name, Some(row), format!("bad {what}")))
                };
                let x = num(30..38, "x coordinate")?;
                let y = num(38..46, "y coordinate")?;
                let z = num(46..54, "z coordinate")?;
                let serial = line
                    .get(6..11)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| DtiError::parse(source_name, Some(row), "bad atom serial"))?;
                let name = line.get(12..16).unwrap_or("").trim().to_string();
                let alt = line.get(16..17).and_then(|s| s.chars().next()).unwrap_or(' ');
                let res_name = line.get(17..20).unwrap_or("").trim().to_string();
                let chain = line.get(21..22).and_then(|s| s.chars().next()).unwrap_or(' ');
                let res_seq = line
                    .get(22..26)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| DtiError::parse(source_name, Some(row), "bad residue number"))?;
                let insertion = line.get(26..27).and_then(|s| s.chars().next()).unwrap_or(' ');
                let element = line
                    .get(76..78)
                    .map(normalize_element)
                    .filter(|e| !e.is_empty())
                    .unwrap_or_else(|| element_from_name(&name));
                // Keep only the first alternate location of each atom.
                if alt != ' ' && !seen.insert(((chain, res_seq, insertion), name.clone())) {
                    continue;
                }
                atoms.push(PdbAtom {
                    serial,
                    name,
                    res_name,
                    chain,
                    res_seq,
                    insertion,
                    coords: [x, y, z],
                    element,
                    hetero: record == "HETATM",
                });
            }
            "CONECT" => {
                let fields: Vec<u32> = (0..5)
                    .filter_map(|i| line.get(6 + 5 * i..11 + 5 * i))
                    .filter_map(|s| s.trim().parse().ok())
                    .collect();
                if let Some((&a, rest)) = fields.split_first() {
                    for &b in rest {
                        if a != b {
                            conect.push((a.min(b), a.max(b)));
                        }
                    }
                }
            }
            "ENDMDL" => break,
            _ => {}
        }
    }
    conect.sort_unstable();
    conect.dedup();
    Ok(PdbStructure { atoms, conect })
}

/// Residue contact graph over C-alpha atoms with an inclusive cutoff.
pub fn residue_graph(structure: &PdbStructure, cutoff: f64, source_name: &str) -> Result<ResidueContactGraph> {
    let mut first: BTreeMap<(char, i32, char), usize> = BTreeMap::new();
    let mut onehot = Vec::new();
    let mut coords = Vec::new();
    for atom in structure.atoms.iter().filter(|a| !a.hetero && a.name == "CA") {
        let key = atom.residue_key();
        if first.contains_key(&key) {
            log::warn!(
                "{source_name}: duplicate residue {}{}{} keeps first C-alpha",
                key.0,
                key.1,
                key.2
            );
            continue;
        }
        first.insert(key, coords.len());
        onehot.push(residue_onehot(&atom.res_name).to_vec());
        coords.push(atom.coords);
    }
    if coords.is_empty() {
        return Err(DtiError::parse(source_name, None, "no CA atoms found"));
    }
    debug_assert!(onehot.iter().all(|r| r.len() == RESIDUE_FEATURE_DIM));
    let edges = neighbor_pairs(&coords, cutoff, |d| d <= cutoff);
    Ok(ResidueContactGraph {
        residue_onehot: onehot,
        calpha_coords: coords,
        edges,
    })
}

pub fn pdb_to_residue_graph(pdb_text: &str, cutoff: f64) -> Result<ResidueContactGraph> {
    let structure = parse_pdb(pdb_text, "pdb")?;
    residue_graph(&structure, cutoff, "pdb")
}

/// Format one ATOM record.
pub fn format_atom_line(atom: &PdbAtom) -> String {
    let name = if atom.name.len() < 4 && atom.element.len() == 1 {
        format!(" {:<3}", atom.name)
    } else {
        format!("{:<4}", atom.name)
    };
    format!(
        "{:<6}{:>5} {}{}{:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
        if atom.hetero { "HETATM" } else { "ATOM" },
        atom.serial,
        name,
        ' ',
        atom.res_name,
        atom.chain,
        atom.res_seq,
        atom.insertion,
        atom.coords[0],
        atom.coords[1],
        atom.coords[2],
        1.0,
        0.0,
        atom.element.to_ascii_uppercase()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ca(serial: u32, res: i32, x: f64) -> PdbAtom {
        PdbAtom {
            serial,
            name: "CA".into(),
            res_name: "ALA".into(),
            chain: 'A',
            res_seq: res,
            insertion: ' ',
            coords: [x, 0.0, 0.0],
            element: "C".into(),
            hetero: false,
        }
    }

    fn text(atoms: &[PdbAtom]) -> String {
        atoms.iter().map(|a| format_atom_line(a) + "\n").collect()
    }

    #[test]
    fn residue_cutoff_is_inclusive() {
        let g = pdb_to_residue_graph(&text(&[ca(1, 1, 0.0), ca(2, 2, 7.9)]), 8.0).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
        let g = pdb_to_residue_graph(&text(&[ca(1, 1, 0.0), ca(2, 2, 8.1)]), 8.0).unwrap();
        assert!(g.edges.is_empty());
        let g = pdb_to_residue_graph(&text(&[ca(1, 1, 0.0), ca(2, 2, 8.0)]), 8.0).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn no_calpha_is_a_parse_error() {
        let mut a = ca(1, 1, 0.0);
        a.name = "CB".into();
        assert!(matches!(
            pdb_to_residue_graph(&text(&[a]), 8.0),
            Err(DtiError::Parse { .. })
        ));
    }

    #[test]
    fn duplicate_residue_keeps_first() {
        let g = pdb_to_residue_graph(&text(&[ca(1, 1, 0.0), ca(2, 1, 3.0), ca(3, 2, 6.0)]), 8.0).unwrap();
        assert_eq!(g.num_residues(), 2);
        assert_eq!(g.calpha_coords[0][0], 0.0);
    }

    #[test]
    fn atom_line_round_trips() {
        let a = ca(17, 42, -12.345);
        let s = parse_pdb(&text(std::slice::from_ref(&a)), "t").unwrap();
        assert_eq!(s.atoms[0], a);
    }
}
