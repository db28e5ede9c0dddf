//! Conformer (V2000 mol-block) reading and the geometric drug graph.

use serde::{Deserialize, Serialize};

use super::geometry::{centroid, distance, neighbor_pairs, rbf, sub, unit, Vec3};
use super::mol2d::Molecular2DGraph;
use crate::error::{DtiError, Result};

pub const DRUG_EDGE_CUTOFF: f64 = 4.5;
/// Element one-hot symbols for geometric node scalars.
pub const GEO_ELEMENTS: [&str; 11] = ["C", "N", "O", "S", "F", "P", "Cl", "Br", "I", "B", "Other"];
pub const NODE_RBF_COUNT: usize = 8;
pub const NODE_RBF_MAX: f64 = 10.0;
pub const EDGE_RBF_COUNT: usize = 16;
pub const NODE_SCALAR_DIM: usize = 11 + NODE_RBF_COUNT;
pub const NODE_VECTOR_DIM: usize = 1;
pub const EDGE_SCALAR_DIM: usize = EDGE_RBF_COUNT + 1;
pub const EDGE_VECTOR_DIM: usize = 1;

/// Heavy atoms of one conformer with covalent bonds from the bond block.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformer {
    pub elements: Vec<String>,
    pub coords: Vec<Vec3>,
    /// Undirected covalent bonds, `i < j`.
    pub bonds: Vec<(usize, usize)>,
}

/// Geometric drug graph. Edges are directed `(source, target)` and the
/// set is closed under reversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecular3DGraph {
    pub coords: Vec<Vec3>,
    /// `N x NODE_SCALAR_DIM`
    pub node_scalars: Vec<Vec<f64>>,
    /// `N x nu x 3`
    pub node_vectors: Vec<Vec<Vec3>>,
    pub edges: Vec<(usize, usize)>,
    /// `E x EDGE_SCALAR_DIM`
    pub edge_scalars: Vec<Vec<f64>>,
    /// `E x nu_e x 3`
    pub edge_vectors: Vec<Vec<Vec3>>,
    pub cutoff: f64,
}

impl Molecular3DGraph {
    pub fn num_atoms(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected view of the edge set, `i < j`, sorted.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .edges
            .iter()
            .filter(|(s, t)| s < t)
            .copied()
            .collect();
        e.sort_unstable();
        e
    }
}

fn element_slot(symbol: &str) -> usize {
    GEO_ELEMENTS[..10]
        .iter()
        .position(|&e| e.eq_ignore_ascii_case(symbol))
        .unwrap_or(10)
}

/// Build the geometric graph from atoms, coordinates and covalent bonds.
///
/// Node scalars: element one-hot + RBF of distance to centroid. Node
/// vector: unit vector centroid -> atom. Edge scalars: RBF of length on
/// `[0, cutoff]` + covalent flag. Edge vector: unit displacement
/// source -> target.
pub fn build_3d_graph(conf: &Conformer, cutoff: f64) -> Result<Molecular3DGraph> {
    let n = conf.coords.len();
    if n == 0 {
        return Err(DtiError::Invalid("conformer has no heavy atoms".into()));
    }
    if conf.elements.len() != n {
        return Err(DtiError::Dimension("element/coordinate count mismatch".into()));
    }
    let c = centroid(&conf.coords);
    let mut node_scalars = Vec::with_capacity(n);
    let mut node_vectors = Vec::with_capacity(n);
    for (el, &x) in conf.elements.iter().zip(&conf.coords) {
        let mut s = vec![0.0; 11];
        s[element_slot(el)] = 1.0;
        let rel = sub(x, c);
        s.extend(rbf(super::geometry::norm(rel), 0.0, NODE_RBF_MAX, NODE_RBF_COUNT));
        node_scalars.push(s);
        node_vectors.push(vec![unit(rel)]);
    }

    let pairs = neighbor_pairs(&conf.coords, cutoff, |d| d < cutoff);
    let mut edges = Vec::with_capacity(pairs.len() * 2);
    let mut edge_scalars = Vec::with_capacity(pairs.len() * 2);
    let mut edge_vectors = Vec::with_capacity(pairs.len() * 2);
    for (i, j) in pairs {
        let d = distance(conf.coords[i], conf.coords[j]);
        let covalent = conf.bonds.binary_search(&(i, j)).is_ok();
        let mut s = rbf(d, 0.0, cutoff, EDGE_RBF_COUNT);
        s.push(if covalent { 1.0 } else { 0.0 });
        for (src, dst) in [(i, j), (j, i)] {
            edges.push((src, dst));
            edge_scalars.push(s.clone());
            edge_vectors.push(vec![unit(sub(conf.coords[dst], conf.coords[src]))]);
        }
    }

    Ok(Molecular3DGraph {
        coords: conf.coords.clone(),
        node_scalars,
        node_vectors,
        edges,
        edge_scalars,
        edge_vectors,
        cutoff,
    })
}

fn field(line: &str, range: std::ops::Range<usize>) -> Option<&str> {
    line.get(range).map(str::trim)
}

/// Parse the first record of a V2000 mol-block / SDF file, keeping heavy
/// atoms only.
pub fn parse_molblock(text: &str, source_name: &str) -> Result<Conformer> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 4 {
        return Err(DtiError::parse(source_name, None, "mol-block shorter than header"));
    }
    let counts = lines[3];
    if counts.contains("V3000") {
        return Err(DtiError::parse(source_name, Some(4), "V3000 mol-blocks are not supported"));
    }
    let parse_count = |r: std::ops::Range<usize>, what: &str| -> Result<usize> {
        field(counts, r)
            .and_then(|s| s.parse().ok())
            .or_else(|| {
                let toks: Vec<&str> = counts.split_whitespace().collect();
                let idx = if what == "atom" { 0 } else { 1 };
                toks.get(idx).and_then(|t| t.parse().ok())
            })
            .ok_or_else(|| DtiError::parse(source_name, Some(4), format!("bad {what} count")))
    };
    let n_atoms = parse_count(0..3, "atom")?;
    let n_bonds = parse_count(3..6, "bond")?;
    if lines.len() < 4 + n_atoms + n_bonds {
        return Err(DtiError::parse(source_name, None, "truncated atom/bond block"));
    }

    let mut all_elements = Vec::with_capacity(n_atoms);
    let mut all_coords = Vec::with_capacity(n_atoms);
    for (k, line) in lines[4..4 + n_atoms].iter().enumerate() {
        let row = 5 + k;
        let fixed = (|| {
            let x: f64 = field(line, 0..10)?.parse().ok()?;
            let y: f64 = field(line, 10..20)?.parse().ok()?;
            let z: f64 = field(line, 20..30)?.parse().ok()?;
            let el = field(line, 31..34)?.to_string();
            (!el.is_empty()).then_some(([x, y, z], el))
        })();
        let parsed = fixed.or_else(|| {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() < 4 {
                return None;
            }
            Some((
                [t[0].parse().ok()?, t[1].parse().ok()?, t[2].parse().ok()?],
                t[3].to_string(),
            ))
        });
        let (xyz, el) = parsed
            .ok_or_else(|| DtiError::parse(source_name, Some(row), "missing or malformed coordinates"))?;
        if xyz.iter().any(|v: &f64| !v.is_finite()) {
            return Err(DtiError::parse(source_name, Some(row), "non-finite coordinate"));
        }
        all_coords.push(xyz);
        all_elements.push(el);
    }

    let mut new_index = vec![usize::MAX; n_atoms];
    let mut elements = Vec::new();
    let mut coords = Vec::new();
    for i in 0..n_atoms {
        if all_elements[i] != "H" && all_elements[i] != "D" {
            new_index[i] = elements.len();
            elements.push(all_elements[i].clone());
            coords.push(all_coords[i]);
        }
    }

    let mut bonds = Vec::with_capacity(n_bonds);
    for (k, line) in lines[4 + n_atoms..4 + n_atoms + n_bonds].iter().enumerate() {
        let row = 5 + n_atoms + k;
        let pair = (|| {
            let a: usize = field(line, 0..3)?.parse().ok()?;
            let b: usize = field(line, 3..6)?.parse().ok()?;
            Some((a, b))
        })()
        .or_else(|| {
            let t: Vec<&str> = line.split_whitespace().collect();
            Some((t.first()?.parse().ok()?, t.get(1)?.parse().ok()?))
        })
        .ok_or_else(|| DtiError::parse(source_name, Some(row), "malformed bond line"))?;
        let (a, b) = pair;
        if a == 0 || b == 0 || a > n_atoms || b > n_atoms {
            return Err(DtiError::parse(source_name, Some(row), "bond references missing atom"));
        }
        let (a, b) = (new_index[a - 1], new_index[b - 1]);
        if a != usize::MAX && b != usize::MAX && a != b {
            bonds.push((a.min(b), a.max(b)));
        }
    }
    bonds.sort_unstable();
    bonds.dedup();

    Ok(Conformer {
        elements,
        coords,
        bonds,
    })
}

pub fn sdf_to_3d_graph(molblock: &str, cutoff: f64) -> Result<Molecular3DGraph> {
    let conf = parse_molblock(molblock, "mol-block")?;
    build_3d_graph(&conf, cutoff)
}

/// Build the 3D graph for a drug whose 2D graph is already known; the
/// heavy-atom count must agree.
pub fn conformer_graph_for_drug(
    drug_id: &str,
    graph2d: &Molecular2DGraph,
    molblock: &str,
    cutoff: f64,
) -> Result<Molecular3DGraph> {
    let conf = parse_molblock(molblock, &format!("{drug_id}.sdf"))?;
    if conf.coords.len() != graph2d.num_atoms() {
        return Err(DtiError::integrity(
            drug_id,
            format!(
                "conformer has {} heavy atoms but SMILES graph has {}",
                conf.coords.len(),
                graph2d.num_atoms()
            ),
        ));
    }
    build_3d_graph(&conf, cutoff)
}

/// Render a heavy-atom conformer as a V2000 mol-block.
pub fn write_molblock(name: &str, conf: &Conformer, bond_orders: &[u8]) -> String {
    let mut out = String::new();
    out.push_str(name);
    out.push_str("\n  trimodal-dti\n\n");
    out.push_str(&format!(
        "{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000\n",
        conf.coords.len(),
        conf.bonds.len()
    ));
    for (x, el) in conf.coords.iter().zip(&conf.elements) {
        out.push_str(&format!(
            "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0\n",
            x[0], x[1], x[2], el
        ));
    }
    for (k, &(a, b)) in conf.bonds.iter().enumerate() {
        let order = bond_orders.get(k).copied().unwrap_or(1);
        out.push_str(&format!("{:>3}{:>3}{:>3}  0\n", a + 1, b + 1, order));
    }
    out.push_str("M  END\n$$$$\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atoms(d: f64) -> Conformer {
        Conformer {
            elements: vec!["C".into(), "C".into()],
            coords: vec![[0.0, 0.0, 0.0], [d, 0.0, 0.0]],
            bonds: vec![],
        }
    }

    #[test]
    fn cutoff_is_strict() {
        assert_eq!(build_3d_graph(&two_atoms(3.0), 4.5).unwrap().undirected_edges().len(), 1);
        assert_eq!(build_3d_graph(&two_atoms(5.0), 4.5).unwrap().undirected_edges().len(), 0);
        assert_eq!(build_3d_graph(&two_atoms(4.5), 4.5).unwrap().undirected_edges().len(), 0);
    }

    #[test]
    fn molblock_round_trip_drops_hydrogens() {
        let conf = Conformer {
            elements: vec!["C".into(), "O".into(), "H".into()],
            coords: vec![[0.0, 0.0, 0.0], [1.4, 0.0, 0.0], [-0.5, 0.9, 0.0]],
            bonds: vec![(0, 1), (0, 2)],
        };
        let text = write_molblock("x", &conf, &[1, 1]);
        let back = parse_molblock(&text, "x").unwrap();
        assert_eq!(back.elements, vec!["C", "O"]);
        assert_eq!(back.bonds, vec![(0, 1)]);
    }

    #[test]
    fn missing_coordinates_is_a_parse_error() {
        let text = "x\n\n\n  1  0  0  0  0  0  0  0  0  0999 V2000\n    0.0000    abc\nM  END\n";
        assert!(matches!(parse_molblock(text, "x"), Err(DtiError::Parse { .. })));
    }

    #[test]
    fn edge_vectors_flip_with_direction() {
        let g = build_3d_graph(&two_atoms(2.0), 4.5).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (1, 0)]);
        assert_eq!(g.edge_vectors[0][0], [1.0, 0.0, 0.0]);
        assert_eq!(g.edge_vectors[1][0], [-1.0, 0.0, 0.0]);
        assert_eq!(g.edge_scalars[0], g.edge_scalars[1]);
    }
}
