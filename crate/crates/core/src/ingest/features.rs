//! Fixed-width atom and residue featurizations.
//!
//! Drug atom layout (75):
//!
//! | block              | width |
//! |--------------------|-------|
//! | element one-hot    | 44    |
//! | degree 0..=10      | 11    |
//! | implicit valence   | 7     |
//! | formal charge      | 1     |
//! | radical electrons  | 1     |
//! | hybridization      | 5     |
//! | aromatic           | 1     |
//! | total H 0..=4      | 5     |
//!
//! Pocket atom layout (31): element one-hot over 11 symbols, degree 0..=6,
//! total H 0..=5, implicit valence 0..=5, aromatic flag.

use super::smiles::{AtomDescriptor, Hybridization};

pub const ATOM_FEATURE_DIM: usize = 75;
pub const POCKET_FEATURE_DIM: usize = 31;
pub const RESIDUE_FEATURE_DIM: usize = 21;

/// 43 named elements followed by the catch-all slot.
pub const ATOM_SYMBOLS: [&str; 44] = [
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al", "I", "B",
    "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H", "Li", "Ge", "Cu",
    "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt", "Hg", "Pb", "Unknown",
];

pub const POCKET_SYMBOLS: [&str; 11] = ["C", "N", "O", "S", "F", "P", "Cl", "Br", "I", "H", "Other"];

/// Standard amino acids in one-hot order; index 20 is "unknown".
pub const AMINO_ACIDS: [&str; 20] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
];

pub const AMINO_ACID_LETTERS: [char; 20] = [
    'A', 'R', 'N', 'D', 'C', 'Q', 'E', 'G', 'H', 'I', 'L', 'K', 'M', 'F', 'P', 'S', 'T', 'W', 'Y',
    'V',
];

pub(crate) mod offsets {
    pub const SYMBOL: usize = 0;
    pub const DEGREE: usize = 44;
    pub const IMPLICIT_VALENCE: usize = 55;
    pub const FORMAL_CHARGE: usize = 62;
    pub const RADICAL: usize = 63;
    pub const HYBRIDIZATION: usize = 64;
    pub const AROMATIC: usize = 69;
    pub const TOTAL_H: usize = 70;
}

fn hybridization_slot(h: Hybridization) -> usize {
    match h {
        Hybridization::Sp => 0,
        Hybridization::Sp2 => 1,
        Hybridization::Sp3 => 2,
        Hybridization::Sp3d => 3,
        Hybridization::Sp3d2 => 4,
    }
}

/// 75-dim drug atom features. Out-of-range integer properties land in
/// the last slot of their block.
pub fn atom_features_75(atom: &AtomDescriptor) -> [f64; ATOM_FEATURE_DIM] {
    use offsets::*;
    let mut f = [0.0; ATOM_FEATURE_DIM];
    let sym = ATOM_SYMBOLS[..43]
        .iter()
        .position(|&s| s == atom.symbol)
        .unwrap_or(43);
    f[SYMBOL + sym] = 1.0;
    f[DEGREE + (atom.degree as usize).min(10)] = 1.0;
    f[IMPLICIT_VALENCE + (atom.implicit_valence as usize).min(6)] = 1.0;
    f[FORMAL_CHARGE] = atom.formal_charge as f64;
    f[RADICAL] = atom.radical_electrons as f64;
    if let Some(h) = atom.hybridization {
        f[HYBRIDIZATION + hybridization_slot(h)] = 1.0;
    }
    f[AROMATIC] = if atom.aromatic { 1.0 } else { 0.0 };
    f[TOTAL_H + (atom.total_hydrogens as usize).min(4)] = 1.0;
    f
}

/// Minimal descriptor for a protein (pocket) atom.
#[derive(Debug, Clone, PartialEq)]
pub struct PocketAtomDescriptor {
    pub element: String,
    pub degree: u32,
    pub total_hydrogens: u32,
    pub implicit_valence: u32,
    pub aromatic: bool,
}

pub fn pocket_atom_features(atom: &PocketAtomDescriptor) -> [f64; POCKET_FEATURE_DIM] {
    let mut f = [0.0; POCKET_FEATURE_DIM];
    let sym = POCKET_SYMBOLS[..10]
        .iter()
        .position(|&s| s.eq_ignore_ascii_case(&atom.element))
        .unwrap_or(10);
    f[sym] = 1.0;
    f[11 + (atom.degree as usize).min(6)] = 1.0;
    f[18 + (atom.total_hydrogens as usize).min(5)] = 1.0;
    f[24 + (atom.implicit_valence as usize).min(5)] = 1.0;
    f[30] = if atom.aromatic { 1.0 } else { 0.0 };
    f
}

pub fn residue_index(resname: &str) -> usize {
    AMINO_ACIDS
        .iter()
        .position(|&r| r.eq_ignore_ascii_case(resname.trim()))
        .unwrap_or(20)
}

pub fn residue_onehot(resname: &str) -> [f64; RESIDUE_FEATURE_DIM] {
    let mut f = [0.0; RESIDUE_FEATURE_DIM];
    f[residue_index(resname)] = 1.0;
    f
}

pub fn three_letter_code(letter: char) -> &'static str {
    AMINO_ACID_LETTERS
        .iter()
        .position(|&c| c == letter.to_ascii_uppercase())
        .map(|i| AMINO_ACIDS[i])
        .unwrap_or("UNK")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::smiles::parse_smiles;

    #[test]
    fn layout_widths_add_up() {
        assert_eq!(offsets::TOTAL_H + 5, ATOM_FEATURE_DIM);
        assert_eq!(ATOM_SYMBOLS.len(), 44);
    }

    #[test]
    fn methane_carbon_has_single_symbol_hit() {
        let m = parse_smiles("C").unwrap();
        let f = atom_features_75(&m.atoms[0]);
        let block = &f[..44];
        assert_eq!(block.iter().filter(|&&x| x == 1.0).count(), 1);
        assert_eq!(block[0], 1.0);
    }

    #[test]
    fn unknown_symbol_maps_to_other_slot() {
        let m = parse_smiles("[U]").unwrap();
        let f = atom_features_75(&m.atoms[0]);
        assert_eq!(f[43], 1.0);
        let p = pocket_atom_features(&PocketAtomDescriptor {
            element: "Zn".into(),
            degree: 0,
            total_hydrogens: 0,
            implicit_valence: 0,
            aromatic: false,
        });
        assert_eq!(p[10], 1.0);
    }

    #[test]
    fn residue_onehot_unknown() {
        assert_eq!(residue_index("GLY"), 7);
        assert_eq!(residue_index("MSE"), 20);
        assert_eq!(residue_onehot("XYZ")[20], 1.0);
    }
}
