mod common;

use serde::Deserialize;
use trimodal_dti::ingest::features::ATOM_SYMBOLS;
use trimodal_dti::ingest::smiles::parse_smiles;
use trimodal_dti::ingest::smiles_to_2d_graph;

#[derive(Deserialize)]
struct RefAtom {
    symbol: String,
    degree: usize,
    implicit_valence: usize,
    formal_charge: i32,
    radical_electrons: u32,
    hybridization: Option<String>,
    aromatic: bool,
    total_hydrogens: usize,
}

#[derive(Deserialize)]
struct RefMol {
    smiles: String,
    atoms: Vec<RefAtom>,
    bonds: Vec<(usize, usize)>,
}

/// Kekulé inputs: the parser takes aromaticity from lowercase atoms and
/// does not re-perceive it, the toolkit does.
const KEKULE_INPUTS: [&str; 1] = ["CN1C=NC2=C1C(=O)N(C(=O)N2C)C"];

fn reference() -> Vec<RefMol> {
    serde_json::from_str(include_str!("fixtures/rdkit_atoms.json")).unwrap()
}

/// The 75-wide vector assembled directly from toolkit descriptors.
fn reference_features(a: &RefAtom) -> Vec<f64> {
    let mut f = vec![0.0; 75];
    let sym = ATOM_SYMBOLS[..43].iter().position(|&s| s == a.symbol).unwrap_or(43);
    f[sym] = 1.0;
    f[44 + a.degree.min(10)] = 1.0;
    f[55 + a.implicit_valence.min(6)] = 1.0;
    f[62] = a.formal_charge as f64;
    f[63] = a.radical_electrons as f64;
    let hyb = ["sp", "sp2", "sp3", "sp3d", "sp3d2"];
    if let Some(h) = &a.hybridization {
        f[64 + hyb.iter().position(|x| x == h).unwrap()] = 1.0;
    }
    f[69] = a.aromatic as u8 as f64;
    f[70 + a.total_hydrogens.min(4)] = 1.0;
    f
}

#[test]
fn atom_descriptors_match_toolkit() {
    let mut report = Vec::new();
    for m in reference() {
        let mol = parse_smiles(&m.smiles).unwrap();
        assert_eq!(mol.atoms.len(), m.atoms.len(), "{}", m.smiles);
        for (i, (ours, r)) in mol.atoms.iter().zip(&m.atoms).enumerate() {
            let hyb = ours.hybridization.map(|h| format!("{h:?}").to_lowercase());
            let checks = [
                ("symbol", ours.symbol == r.symbol),
                ("degree", ours.degree as usize == r.degree),
                ("implicit", ours.implicit_valence as usize == r.implicit_valence),
                ("charge", ours.formal_charge == r.formal_charge),
                ("radical", ours.radical_electrons == r.radical_electrons),
                ("hybridization", hyb == r.hybridization),
                ("aromatic", ours.aromatic == r.aromatic || KEKULE_INPUTS.contains(&m.smiles.as_str())),
                ("hydrogens", ours.total_hydrogens as usize == r.total_hydrogens),
            ];
            for (name, ok) in checks {
                if !ok {
                    report.push(format!("{} atom {i} {name}: ours {:?} ref {:?}/{:?}", m.smiles, ours, r.hybridization, r.symbol));
                }
            }
        }
    }
    for r in &report {
        println!("{r}");
    }
    assert!(report.is_empty(), "{} mismatches", report.len());
}

#[test]
fn feature_vectors_and_bonds_match_toolkit() {
    for m in reference() {
        let g = smiles_to_2d_graph(&m.smiles).unwrap();
        assert_eq!(g.bonds, m.bonds, "{}", m.smiles);
        if KEKULE_INPUTS.contains(&m.smiles.as_str()) {
            continue;
        }
        for (i, (ours, r)) in g.node_features.iter().zip(&m.atoms).enumerate() {
            assert_eq!(ours, &reference_features(r), "{} atom {i}", m.smiles);
        }
    }
}

#[test]
fn benzene_cross_check() {
    let g = smiles_to_2d_graph("c1ccccc1").unwrap();
    assert_eq!((g.num_atoms(), g.bonds.len()), (6, 6));
    for f in &g.node_features {
        assert_eq!(f.len(), 75);
        assert_eq!(f[69], 1.0, "aromatic slot");
        assert_eq!(f[44 + 2], 1.0, "degree 2 slot");
    }
}
