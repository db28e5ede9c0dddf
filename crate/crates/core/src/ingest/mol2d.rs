use serde::{Deserialize, Serialize};

use super::features::{atom_features_75, ATOM_FEATURE_DIM};
use super::smiles::{parse_smiles, Molecule};
use crate::error::{DtiError, Result};

/// Topological drug graph: one node per heavy atom, undirected bonds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecular2DGraph {
    /// `N_a x 75`
    pub node_features: Vec<Vec<f64>>,
    /// Undirected bonds, `i < j`.
    pub bonds: Vec<(usize, usize)>,
    /// Element symbol per atom, used to check conformer consistency.
    pub elements: Vec<String>,
}

impl Molecular2DGraph {
    pub fn num_atoms(&self) -> usize {
        self.node_features.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        dense_adjacency(self.num_atoms(), &self.bonds)
    }

    pub fn from_molecule(mol: &Molecule) -> Result<Self> {
        if mol.atoms.is_empty() {
            return Err(DtiError::Chemistry {
                smiles: mol.smiles.clone(),
                message: "molecule has no heavy atoms".into(),
            });
        }
        let node_features = mol
            .atoms
            .iter()
            .map(|a| atom_features_75(a).to_vec())
            .collect();
        let mut bonds: Vec<(usize, usize)> = mol
            .bonds
            .iter()
            .map(|b| (b.begin.min(b.end), b.begin.max(b.end)))
            .collect();
        bonds.sort_unstable();
        Ok(Molecular2DGraph {
            node_features,
            bonds,
            elements: mol.atoms.iter().map(|a| a.symbol.clone()).collect(),
        })
    }

    /// Check the structural invariants (75 columns, symmetric zero-diagonal
    /// adjacency, bonds in range).
    pub fn validate(&self) -> Result<()> {
        if self.num_atoms() == 0 {
            return Err(DtiError::Invalid("2D graph has zero atoms".into()));
        }
        if let Some(row) = self.node_features.iter().find(|r| r.len() != ATOM_FEATURE_DIM) {
            return Err(DtiError::Dimension(format!(
                "atom feature row has {} columns, expected {ATOM_FEATURE_DIM}",
                row.len()
            )));
        }
        for &(i, j) in &self.bonds {
            if i == j || i >= self.num_atoms() || j >= self.num_atoms() {
                return Err(DtiError::Invalid(format!("bad bond ({i}, {j})")));
            }
        }
        Ok(())
    }
}

pub fn smiles_to_2d_graph(smiles: &str) -> Result<Molecular2DGraph> {
    let mol = parse_smiles(smiles)?;
    Molecular2DGraph::from_molecule(&mol)
}

pub(crate) fn dense_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j) in edges {
        if i != j {
            a[i][j] = 1.0;
            a[j][i] = 1.0;
        }
    }
    a
}
