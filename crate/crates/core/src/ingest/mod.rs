//! Parsing of interaction tables, SMILES, conformers, structures and
//! pocket definitions into validated graph and sequence records.

pub mod features;
pub mod geometry;
pub mod interactions;
pub mod mol2d;
pub mod mol3d;
pub mod pdb;
pub mod pockets;
pub mod smiles;

use serde::{Deserialize, Serialize};

pub use features::{atom_features_75, ATOM_FEATURE_DIM, POCKET_FEATURE_DIM, RESIDUE_FEATURE_DIM};
pub use interactions::{load_interactions, InteractionSample, InteractionTable, TableFormat};
pub use mol2d::{smiles_to_2d_graph, Molecular2DGraph};
pub use mol3d::{sdf_to_3d_graph, Molecular3DGraph, DRUG_EDGE_CUTOFF};
pub use pdb::{pdb_to_residue_graph, ResidueContactGraph, RESIDUE_EDGE_CUTOFF};
pub use pockets::{load_pockets, PocketGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugRecord {
    pub drug_id: String,
    pub smiles: String,
    pub graph2d: Molecular2DGraph,
    pub graph3d: Option<Molecular3DGraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteinRecord {
    pub protein_id: String,
    pub sequence: String,
    pub pockets: Vec<PocketGraph>,
    pub residue_graph: Option<ResidueContactGraph>,
}
