//! SMILES to a 2D atom graph, a conformer to a 3D radius graph, and a PDB
//! file to a residue contact graph and pocket graphs.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trimodal_dti::ingest::mol3d::{build_3d_graph, Conformer};
use trimodal_dti::ingest::pdb::{parse_pdb, residue_graph};
use trimodal_dti::ingest::pockets::{load_pockets, DEFAULT_POCKET_ATOM_CAP};
use trimodal_dti::ingest::{smiles_to_2d_graph, DRUG_EDGE_CUTOFF, RESIDUE_EDGE_CUTOFF};
use trimodal_dti::synthetic::{embed_conformer, generate, SyntheticSpec};

pub fn run_example(out: &Path) -> trimodal_dti::Result<()> {
    let aspirin = "CC(=O)Oc1ccccc1C(=O)O";
    let g2 = smiles_to_2d_graph(aspirin)?;
    println!(
        "{aspirin}: {} heavy atoms, {} bonds, {} features per atom",
        g2.num_atoms(),
        g2.bonds.len(),
        g2.node_features[0].len()
    );

    let coords = embed_conformer(g2.num_atoms(), &g2.bonds, &mut ChaCha8Rng::seed_from_u64(1));
    let conf = Conformer {
        elements: g2.elements.clone(),
        coords,
        bonds: g2.bonds.clone(),
    };
    let g3 = build_3d_graph(&conf, DRUG_EDGE_CUTOFF)?;
    println!(
        "3D graph: {} directed edges within {DRUG_EDGE_CUTOFF} A, {} node scalars, {} edge scalars",
        g3.num_edges(),
        g3.node_scalars[0].len(),
        g3.edge_scalars[0].len()
    );

    let raw = out.join("raw");
    let spec = SyntheticSpec {
        num_drugs: 4,
        num_proteins: 2,
        num_pairs: 8,
        families: 2,
        ..SyntheticSpec::default()
    };
    generate(&spec, &raw)?;
    let pdb_path = std::fs::read_dir(raw.join("structures"))
        .map_err(|e| trimodal_dti::DtiError::io(raw.join("structures"), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .min()
        .expect("generated structures");
    let id = pdb_path.file_stem().unwrap().to_string_lossy().to_string();
    let text = std::fs::read_to_string(&pdb_path).map_err(|e| trimodal_dti::DtiError::io(&pdb_path, e))?;
    let structure = parse_pdb(&text, &id)?;
    let residues = residue_graph(&structure, RESIDUE_EDGE_CUTOFF, &id)?;
    println!(
        "{id}: {} atoms, {} residues, {} Ca contacts within {RESIDUE_EDGE_CUTOFF} A",
        structure.atoms.len(),
        residues.num_residues(),
        residues.edges.len()
    );
    let pocket_file = raw.join("pockets").join(format!("{id}.json"));
    let pockets = load_pockets(&id, Some(&pocket_file), &structure, DEFAULT_POCKET_ATOM_CAP)?;
    for (i, p) in pockets.iter().enumerate() {
        println!("  pocket {i}: {} atoms", p.num_atoms());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("trimod-featurize"));
    run_example(&out)
}
