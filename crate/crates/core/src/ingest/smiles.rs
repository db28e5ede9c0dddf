//! A small SMILES reader covering the OpenSMILES grammar used by drug
//! datasets: organic-subset and bracket atoms, branches, ring closures
//! (including `%nn`), bond symbols and disconnected components.
//!
//! Hydrogens are never graph nodes. Bracket hydrogens and explicit `[H]`
//! atoms are folded into the heavy atom's hydrogen count, and implicit
//! hydrogens are derived from the default valence model.

use crate::error::{DtiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Quadruple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence; aromatic bonds count as one
    /// here and the pi contribution is added per atom.
    fn valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Quadruple => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hybridization {
    Sp,
    Sp2,
    Sp3,
    Sp3d,
    Sp3d2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
}

/// Per-atom descriptor with everything the atom featurizers need.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDescriptor {
    pub symbol: String,
    /// Number of heavy-atom neighbours.
    pub degree: u32,
    /// Implicit hydrogens (zero for bracket atoms).
    pub implicit_valence: u32,
    pub formal_charge: i32,
    pub radical_electrons: u32,
    pub hybridization: Option<Hybridization>,
    pub aromatic: bool,
    pub total_hydrogens: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub smiles: String,
    pub atoms: Vec<AtomDescriptor>,
    pub bonds: Vec<Bond>,
}

impl Molecule {
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.bonds.iter().filter_map(move |b| {
            if b.begin == idx {
                Some((b.end, b.order))
            } else if b.end == idx {
                Some((b.begin, b.order))
            } else {
                None
            }
        })
    }
}

#[derive(Debug, Clone)]
struct RawAtom {
    symbol: String,
    aromatic: bool,
    bracket: bool,
    charge: i32,
    hcount: u32,
}

const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Outer-shell electron count for main-group elements.
pub(crate) fn valence_electrons(symbol: &str) -> Option<u32> {
    Some(match symbol {
        "H" | "Li" | "Na" | "K" | "Rb" | "Cs" => 1,
        "Be" | "Mg" | "Ca" | "Sr" | "Ba" => 2,
        "B" | "Al" | "Ga" | "In" | "Tl" => 3,
        "C" | "Si" | "Ge" | "Sn" | "Pb" => 4,
        "N" | "P" | "As" | "Sb" | "Bi" => 5,
        "O" | "S" | "Se" | "Te" => 6,
        "F" | "Cl" | "Br" | "I" | "At" => 7,
        _ => return None,
    })
}

/// Allowed valences for an atom, adjusted for charge by shifting to the
/// isoelectronic neighbour (N+ behaves like C, O- like F, ...).
fn allowed_valences(symbol: &str, charge: i32) -> Option<Vec<u32>> {
    let ve = valence_electrons(symbol)? as i32 - charge;
    let second_row = matches!(symbol, "B" | "C" | "N" | "O" | "F");
    let list: Vec<u32> = match ve {
        1 => vec![1],
        2 => vec![2],
        3 => vec![3],
        4 => vec![4],
        5 if second_row => vec![3],
        5 => vec![3, 5],
        6 if second_row => vec![2],
        6 => vec![2, 4, 6],
        7 => vec![1],
        _ => return None,
    };
    Some(list)
}

/// Default valences for organic-subset atoms written without brackets.
fn organic_valences(symbol: &str) -> &'static [u32] {
    match symbol {
        "B" => &[3],
        "C" => &[4],
        "N" => &[3, 5],
        "O" => &[2],
        "P" => &[3, 5],
        "S" => &[2, 4, 6],
        "F" | "Cl" | "Br" | "I" => &[1],
        _ => &[],
    }
}

struct Cursor<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn err(&self, message: impl Into<String>) -> DtiError {
        DtiError::Chemistry {
            smiles: self.src.to_string(),
            message: format!("{} at position {}", message.into(), self.pos),
        }
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            None
        } else {
            self.src[start..self.pos].parse().ok()
        }
    }
}

fn parse_organic(cur: &mut Cursor<'_>) -> Option<RawAtom> {
    let c = cur.peek()?;
    let next = cur.bytes.get(cur.pos + 1).copied();
    let (symbol, aromatic, len) = match (c, next) {
        (b'C', Some(b'l')) => ("Cl", false, 2),
        (b'B', Some(b'r')) => ("Br", false, 2),
        (b'B', _) => ("B", false, 1),
        (b'C', _) => ("C", false, 1),
        (b'N', _) => ("N", false, 1),
        (b'O', _) => ("O", false, 1),
        (b'P', _) => ("P", false, 1),
        (b'S', _) => ("S", false, 1),
        (b'F', _) => ("F", false, 1),
        (b'I', _) => ("I", false, 1),
        (b'b', _) => ("B", true, 1),
        (b'c', _) => ("C", true, 1),
        (b'n', _) => ("N", true, 1),
        (b'o', _) => ("O", true, 1),
        (b'p', _) => ("P", true, 1),
        (b's', _) => ("S", true, 1),
        (b'*', _) => ("*", false, 1),
        _ => return None,
    };
    cur.pos += len;
    Some(RawAtom {
        symbol: symbol.to_string(),
        aromatic,
        bracket: false,
        charge: 0,
        hcount: 0,
    })
}

fn parse_bracket(cur: &mut Cursor<'_>) -> Result<RawAtom> {
    // Caller consumed '['.
    let _isotope = cur.number();
    let start = cur.pos;
    let (symbol, aromatic) = match cur.peek() {
        Some(b'*') => {
            cur.pos += 1;
            ("*".to_string(), false)
        }
        Some(c) if c.is_ascii_lowercase() => {
            // Aromatic two-letter forms first.
            let two = cur.src.get(start..start + 2).unwrap_or("");
            if two == "se" || two == "as" || two == "te" {
                cur.pos += 2;
                (capitalize(two), true)
            } else if matches!(c, b'b' | b'c' | b'n' | b'o' | b'p' | b's') {
                cur.pos += 1;
                ((c as char).to_ascii_uppercase().to_string(), true)
            } else {
                return Err(cur.err("unknown aromatic symbol"));
            }
        }
        Some(c) if c.is_ascii_uppercase() => {
            let two = cur.src.get(start..start + 2).unwrap_or("");
            if two.len() == 2 && two.as_bytes()[1].is_ascii_lowercase() && ELEMENTS.contains(&two) {
                cur.pos += 2;
                (two.to_string(), false)
            } else {
                let one = &cur.src[start..start + 1];
                if !ELEMENTS.contains(&one) {
                    return Err(cur.err(format!("unknown element {one}")));
                }
                cur.pos += 1;
                (one.to_string(), false)
            }
        }
        _ => return Err(cur.err("expected element symbol in bracket atom")),
    };

    // Chirality: '@', '@@', '@TH1', '@SP2', ... (ignored).
    if cur.peek() == Some(b'@') {
        cur.pos += 1;
        if cur.peek() == Some(b'@') {
            cur.pos += 1;
        }
        while matches!(cur.peek(), Some(b'A'..=b'Z')) {
            cur.pos += 1;
        }
        cur.number();
    }

    let mut hcount = 0;
    if cur.peek() == Some(b'H') {
        cur.pos += 1;
        hcount = cur.number().unwrap_or(1);
    }

    let mut charge = 0i32;
    match cur.peek() {
        Some(b'+') | Some(b'-') => {
            let sign = if cur.bump() == Some(b'+') { 1 } else { -1 };
            let symbol_byte = if sign > 0 { b'+' } else { b'-' };
            if let Some(n) = cur.number() {
                charge = sign * n as i32;
            } else {
                charge = sign;
                while cur.peek() == Some(symbol_byte) {
                    cur.pos += 1;
                    charge += sign;
                }
            }
        }
        _ => {}
    }

    if cur.peek() == Some(b':') {
        cur.pos += 1;
        if cur.number().is_none() {
            return Err(cur.err("atom class without number"));
        }
    }

    if cur.bump() != Some(b']') {
        return Err(cur.err("unterminated bracket atom"));
    }

    Ok(RawAtom {
        symbol,
        aromatic,
        bracket: true,
        charge,
        hcount,
    })
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

/// Parse a SMILES string into a heavy-atom molecule with per-atom
/// descriptors.
pub fn parse_smiles(smiles: &str) -> Result<Molecule> {
    let s = smiles.trim();
    if s.is_empty() {
        return Err(DtiError::Chemistry {
            smiles: smiles.to_string(),
            message: "empty SMILES".into(),
        });
    }
    let mut cur = Cursor {
        src: s,
        bytes: s.as_bytes(),
        pos: 0,
    };

    let mut atoms: Vec<RawAtom> = Vec::new();
    let mut bonds: Vec<(usize, usize, Option<BondOrder>)> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<BondOrder> = None;
    let mut rings: std::collections::BTreeMap<u32, (usize, Option<BondOrder>)> = Default::default();

    while let Some(c) = cur.peek() {
        match c {
            b'(' => {
                cur.pos += 1;
                let p = prev.ok_or_else(|| cur.err("branch without preceding atom"))?;
                stack.push(p);
            }
            b')' => {
                cur.pos += 1;
                prev = Some(stack.pop().ok_or_else(|| cur.err("unbalanced ')'"))?);
                if pending.is_some() {
                    return Err(cur.err("bond symbol before ')'"));
                }
            }
            b'-' | b'=' | b'#' | b'$' | b':' | b'/' | b'\\' => {
                cur.pos += 1;
                if pending.is_some() {
                    return Err(cur.err("consecutive bond symbols"));
                }
                pending = Some(match c {
                    b'=' => BondOrder::Double,
                    b'#' => BondOrder::Triple,
                    b'$' => BondOrder::Quadruple,
                    b':' => BondOrder::Aromatic,
                    _ => BondOrder::Single,
                });
            }
            b'.' => {
                cur.pos += 1;
                if pending.is_some() {
                    return Err(cur.err("bond symbol before '.'"));
                }
                prev = None;
            }
            b'0'..=b'9' | b'%' => {
                let label = if c == b'%' {
                    cur.pos += 1;
                    let start = cur.pos;
                    if cur.src.len() < start + 2 {
                        return Err(cur.err("truncated %nn ring label"));
                    }
                    let lbl = cur.src[start..start + 2]
                        .parse::<u32>()
                        .map_err(|_| cur.err("bad %nn ring label"))?;
                    cur.pos += 2;
                    lbl
                } else {
                    cur.pos += 1;
                    (c - b'0') as u32
                };
                let here = prev.ok_or_else(|| cur.err("ring closure without atom"))?;
                if let Some((other, order)) = rings.remove(&label) {
                    if other == here {
                        return Err(cur.err("ring closure to self"));
                    }
                    let order = match (order, pending.take()) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(cur.err("conflicting ring-closure bond orders"))
                        }
                        (a, b) => a.or(b),
                    };
                    bonds.push((other, here, order));
                } else {
                    rings.insert(label, (here, pending.take()));
                }
            }
            b'[' => {
                cur.pos += 1;
                let atom = parse_bracket(&mut cur)?;
                push_atom(&mut atoms, &mut bonds, &mut prev, &mut pending, atom);
            }
            _ => {
                let atom = parse_organic(&mut cur).ok_or_else(|| {
                    cur.err(format!("unexpected character {:?}", c as char))
                })?;
                push_atom(&mut atoms, &mut bonds, &mut prev, &mut pending, atom);
            }
        }
    }

    if !stack.is_empty() {
        return Err(cur.err("unbalanced '('"));
    }
    if !rings.is_empty() {
        return Err(cur.err("unclosed ring"));
    }
    if pending.is_some() {
        return Err(cur.err("dangling bond symbol"));
    }
    if atoms.is_empty() {
        return Err(cur.err("no atoms"));
    }

    let mut resolved: Vec<Bond> = Vec::with_capacity(bonds.len());
    for (a, b, order) in bonds {
        if resolved
            .iter()
            .any(|x| (x.begin == a && x.end == b) || (x.begin == b && x.end == a))
        {
            return Err(DtiError::Chemistry {
                smiles: smiles.to_string(),
                message: format!("duplicate bond between atoms {a} and {b}"),
            });
        }
        let order = order.unwrap_or(if atoms[a].aromatic && atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        });
        resolved.push(Bond {
            begin: a,
            end: b,
            order,
        });
    }

    fold_hydrogens(&mut atoms, &mut resolved);
    describe(smiles, atoms, resolved)
}

fn push_atom(
    atoms: &mut Vec<RawAtom>,
    bonds: &mut Vec<(usize, usize, Option<BondOrder>)>,
    prev: &mut Option<usize>,
    pending: &mut Option<BondOrder>,
    atom: RawAtom,
) {
    let idx = atoms.len();
    atoms.push(atom);
    if let Some(p) = *prev {
        bonds.push((p, idx, pending.take()));
    }
    *pending = None;
    *prev = Some(idx);
}

/// Remove explicit hydrogen atoms that hang off a heavy atom, crediting
/// them to the neighbour's bracket hydrogen count.
fn fold_hydrogens(atoms: &mut Vec<RawAtom>, bonds: &mut Vec<Bond>) {
    if atoms.iter().all(|a| a.symbol == "H") {
        return;
    }
    let mut remove = vec![false; atoms.len()];
    for (i, atom) in atoms.iter().enumerate() {
        if atom.symbol != "H" || atom.charge != 0 {
            continue;
        }
        let nbrs: Vec<usize> = bonds
            .iter()
            .filter_map(|b| {
                if b.begin == i {
                    Some(b.end)
                } else if b.end == i {
                    Some(b.begin)
                } else {
                    None
                }
            })
            .collect();
        if nbrs.len() == 1 && atoms[nbrs[0]].symbol != "H" {
            remove[i] = true;
        }
    }
    if !remove.iter().any(|&r| r) {
        return;
    }
    for b in bonds.iter() {
        if remove[b.begin] {
            atoms[b.end].hcount += 1;
            atoms[b.end].bracket = true;
        } else if remove[b.end] {
            atoms[b.begin].hcount += 1;
            atoms[b.begin].bracket = true;
        }
    }
    let mut new_index = vec![usize::MAX; atoms.len()];
    let mut kept = Vec::with_capacity(atoms.len());
    for (i, atom) in atoms.drain(..).enumerate() {
        if !remove[i] {
            new_index[i] = kept.len();
            kept.push(atom);
        }
    }
    *atoms = kept;
    bonds.retain(|b| !remove[b.begin] && !remove[b.end]);
    for b in bonds.iter_mut() {
        b.begin = new_index[b.begin];
        b.end = new_index[b.end];
    }
}

fn describe(smiles: &str, atoms: Vec<RawAtom>, bonds: Vec<Bond>) -> Result<Molecule> {
    let n = atoms.len();
    let mut degree = vec![0u32; n];
    let mut bond_valence = vec![0u32; n];
    let mut multiple = vec![false; n];
    for b in &bonds {
        for &i in &[b.begin, b.end] {
            degree[i] += 1;
            bond_valence[i] += b.order.valence();
            if matches!(b.order, BondOrder::Double | BondOrder::Triple | BondOrder::Quadruple) {
                multiple[i] = true;
            }
        }
    }

    let mut implicit = vec![0u32; n];
    let mut radicals = vec![0u32; n];
    for (i, atom) in atoms.iter().enumerate() {
        if atom.bracket {
            if let Some(allowed) = allowed_valences(&atom.symbol, atom.charge) {
                let mut v = bond_valence[i] + atom.hcount;
                if atom.aromatic && pi_acceptor(atom) {
                    v += 1;
                }
                if let Some(target) = allowed.iter().copied().find(|&t| t >= v) {
                    radicals[i] = target - v;
                }
            }
        } else if atom.aromatic {
            implicit[i] = if pi_acceptor(atom) {
                let base = organic_valences(&atom.symbol).first().copied().unwrap_or(0);
                base.saturating_sub(bond_valence[i] + 1)
            } else {
                0
            };
        } else {
            let v = bond_valence[i];
            implicit[i] = organic_valences(&atom.symbol)
                .iter()
                .copied()
                .find(|&t| t >= v)
                .map(|t| t - v)
                .unwrap_or(0);
        }
    }

    let total_h: Vec<u32> = (0..n).map(|i| implicit[i] + atoms[i].hcount).collect();

    // Conjugation: a lone-pair heteroatom single-bonded to a pi-bearing
    // C/N/O neighbour is treated as sp2.
    let pi_center: Vec<bool> = (0..n)
        .map(|i| {
            (atoms[i].aromatic || multiple[i]) && matches!(atoms[i].symbol.as_str(), "C" | "N" | "O")
        })
        .collect();

    let mut descriptors = Vec::with_capacity(n);
    for (i, atom) in atoms.into_iter().enumerate() {
        let hybridization = if atom.aromatic {
            Some(Hybridization::Sp2)
        } else {
            valence_electrons(&atom.symbol).and_then(|ve| {
                if atom.symbol == "H" {
                    return None;
                }
                let used = bond_valence[i] + total_h[i];
                let free = ve as i32 - atom.charge - used as i32;
                let lone_pairs = (free.max(0) / 2) as u32;
                let mut orbitals = degree[i] + total_h[i] + lone_pairs;
                let conjugated = lone_pairs > 0
                    && !multiple[i]
                    && matches!(atom.symbol.as_str(), "N" | "O" | "S")
                    && bonds.iter().any(|b| {
                        let other = if b.begin == i {
                            b.end
                        } else if b.end == i {
                            b.begin
                        } else {
                            return false;
                        };
                        b.order == BondOrder::Single && pi_center[other]
                    });
                if conjugated && orbitals == 4 {
                    orbitals = 3;
                }
                match orbitals {
                    2 => Some(Hybridization::Sp),
                    3 => Some(Hybridization::Sp2),
                    4 => Some(Hybridization::Sp3),
                    5 => Some(Hybridization::Sp3d),
                    6 => Some(Hybridization::Sp3d2),
                    _ => None,
                }
            })
        };
        descriptors.push(AtomDescriptor {
            symbol: atom.symbol,
            degree: degree[i],
            implicit_valence: implicit[i],
            formal_charge: atom.charge,
            radical_electrons: radicals[i],
            hybridization,
            aromatic: atom.aromatic,
            total_hydrogens: total_h[i],
        });
    }

    Ok(Molecule {
        smiles: smiles.to_string(),
        atoms: descriptors,
        bonds,
    })
}

/// Aromatic atoms that take part in the pi system with one electron
/// (pyridine-type) rather than donating a lone pair (furan/thiophene-type).
fn pi_acceptor(atom: &RawAtom) -> bool {
    match atom.symbol.as_str() {
        "C" | "B" => true,
        "N" | "P" | "As" => atom.hcount == 0 && atom.charge == 0,
        _ => false,
    }
}
