//! Seeded synthetic benchmark in the on-disk dataset layout.
//!
//! Drugs and proteins are drawn from a small number of families. Each
//! drug family shares a core substructure and each protein family shares
//! a sequence motif; a pair interacts exactly when the families agree.
//! Conformers come from a spring relaxation of the SMILES topology and
//! structures from a self-avoiding Cα walk with side atoms attached.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{preprocess_dir, DatasetArchive};
use crate::error::{DtiError, Result};
use crate::ingest::features::{AMINO_ACIDS, AMINO_ACID_LETTERS};
use crate::ingest::geometry::{distance, Vec3};
use crate::ingest::interactions::{write_interactions, InteractionSample, InteractionTable, TableFormat};
use crate::ingest::mol3d::{write_molblock, Conformer};
use crate::ingest::pdb::{format_atom_line, PdbAtom};
use crate::ingest::pockets::{PocketFile, PocketSpec, DEFAULT_POCKET_ATOM_CAP};
use crate::ingest::smiles::{parse_smiles, BondOrder};

const CORES: [&str; 6] = [
    "c1ccccc1",
    "C1CCNCC1",
    "c1ccncc1",
    "C(=O)N",
    "S(=O)(=O)N",
    "c1ccoc1",
];
const LINKERS: [&str; 8] = ["C", "CC", "CO", "CN", "C(C)", "C(=O)", "N", "O"];
const CAPS: [&str; 5] = ["C", "F", "Cl", "O", "N"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_drugs: usize,
    pub num_proteins: usize,
    pub num_pairs: usize,
    pub families: usize,
    pub min_residues: usize,
    pub max_residues: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_drugs: 40,
            num_proteins: 12,
            num_pairs: 200,
            families: 3,
            min_residues: 40,
            max_residues: 70,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSummary {
    pub drugs: usize,
    pub proteins: usize,
    pub positives: usize,
    pub negatives: usize,
}

fn drug_smiles(family: usize, rng: &mut ChaCha8Rng) -> String {
    let core = CORES[family % CORES.len()];
    let mut s = String::new();
    s.push_str(CAPS[rng.random_range(0..CAPS.len())]);
    for _ in 0..rng.random_range(0..3) {
        s.push_str(LINKERS[rng.random_range(0..LINKERS.len())]);
    }
    s.push_str(core);
    for _ in 0..rng.random_range(1..3) {
        s.push_str(LINKERS[rng.random_range(0..LINKERS.len())]);
    }
    // Distinguish families that share a core index modulo CORES.len().
    for _ in 0..family / CORES.len() {
        s.push_str("CC");
    }
    s
}

/// Spring relaxation: bonded pairs pulled to 1.5 Å, 1-3 pairs to 2.5 Å,
/// everything else pushed beyond 3 Å.
pub fn embed_conformer(n: usize, bonds: &[(usize, usize)], rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in bonds {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut target: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(a, b) in bonds {
        target.insert((a.min(b), a.max(b)), 1.5);
    }
    for (c, nb) in adj.iter().enumerate() {
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                let key = (a.min(b), a.max(b));
                if a != b && !target.contains_key(&key) && key.0 != c {
                    target.entry(key).or_insert(2.5);
                }
            }
        }
    }
    let mut x: Vec<Vec3> = (0..n)
        .map(|_| {
            [
                rng.random_range(-2.0..2.0) * (n as f64).cbrt(),
                rng.random_range(-2.0..2.0) * (n as f64).cbrt(),
                rng.random_range(-2.0..2.0) * (n as f64).cbrt(),
            ]
        })
        .collect();
    let step = 0.1;
    for _ in 0..400 {
        let mut grad = vec![[0.0; 3]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = distance(x[i], x[j]).max(1e-6);
                let f = match target.get(&(i, j)) {
                    Some(&t) => d - t,
                    None if d < 3.0 => (d - 3.0) * 0.5,
                    None => continue,
                };
                for k in 0..3 {
                    let g = f * (x[i][k] - x[j][k]) / d;
                    grad[i][k] += g;
                    grad[j][k] -= g;
                }
            }
        }
        for i in 0..n {
            for k in 0..3 {
                x[i][k] -= step * grad[i][k];
            }
        }
    }
    x
}

fn protein_sequence(family: usize, len: usize, rng: &mut ChaCha8Rng) -> (String, usize) {
    let letters = AMINO_ACID_LETTERS;
    let mut motif_rng = ChaCha8Rng::seed_from_u64(0xF00D + family as u64);
    let motif: String = (0..10).map(|_| letters[motif_rng.random_range(0..letters.len())]).collect();
    let mut seq: String = (0..len - motif.len()).map(|_| letters[rng.random_range(0..letters.len())]).collect();
    let at = rng.random_range(0..=seq.len());
    seq.insert_str(at, &motif);
    (seq, at)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = [
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0f64),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn add(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Self-avoiding Cα walk with 3.8 Å steps biased back towards the origin.
fn calpha_walk(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut ca: Vec<Vec3> = vec![[0.0; 3]];
    while ca.len() < n {
        let last = *ca.last().expect("non-empty");
        let mut placed = false;
        for _ in 0..200 {
            let dir = random_unit(rng);
            let pull = 0.02;
            let cand = add(add(last, dir, 3.8), last, -pull);
            if ca.iter().all(|p| distance(*p, cand) >= 4.0 || *p == last) {
                ca.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            ca.push(add(last, random_unit(rng), 3.8));
        }
    }
    ca
}

fn residue_atoms(res_name: &str) -> &'static [(&'static str, &'static str)] {
    match res_name {
        "GLY" => &[("N", "N"), ("CA", "C"), ("C", "C"), ("O", "O")],
        _ => &[("N", "N"), ("CA", "C"), ("C", "C"), ("O", "O"), ("CB", "C")],
    }
}

fn pdb_text(seq: &str, rng: &mut ChaCha8Rng) -> (String, Vec<PdbAtom>) {
    let ca = calpha_walk(seq.len(), rng);
    let mut atoms = Vec::new();
    let mut serial = 1;
    for (i, c) in seq.chars().enumerate() {
        let res_name = AMINO_ACID_LETTERS
            .iter()
            .position(|&l| l == c)
            .map(|k| AMINO_ACIDS[k])
            .unwrap_or("UNK");
        for &(name, el) in residue_atoms(res_name) {
            let pos = if name == "CA" {
                ca[i]
            } else {
                add(ca[i], random_unit(rng), 1.5)
            };
            atoms.push(PdbAtom {
                serial,
                name: name.into(),
                res_name: res_name.into(),
                chain: 'A',
                res_seq: i as i32 + 1,
                insertion: ' ',
                coords: pos,
                element: el.into(),
                hetero: false,
            });
            serial += 1;
        }
    }
    let mut text = String::new();
    for a in &atoms {
        text.push_str(&format_atom_line(a));
        text.push('\n');
    }
    text.push_str("END\n");
    (text, atoms)
}

/// Serials of atoms within `radius` of `center`, up to `cap`.
fn pocket_around(atoms: &[PdbAtom], center: Vec3, radius: f64, cap: usize) -> Vec<u32> {
    let mut hits: Vec<(f64, u32)> = atoms
        .iter()
        .map(|a| (distance(a.coords, center), a.serial))
        .filter(|&(d, _)| d <= radius)
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut s: Vec<u32> = hits.into_iter().take(cap).map(|h| h.1).collect();
    s.sort_unstable();
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| DtiError::io(path, e))
}

/// Write a complete synthetic dataset into `out_dir`.
pub fn generate(spec: &SyntheticSpec, out_dir: &Path) -> Result<SyntheticSummary> {
    if spec.families < 2 || spec.num_drugs < spec.families || spec.num_proteins < spec.families {
        return Err(DtiError::Config("need >= 2 families and at least one drug and protein per family".into()));
    }
    if spec.min_residues < 12 || spec.max_residues < spec.min_residues {
        return Err(DtiError::Config("residue range must satisfy 12 <= min <= max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for sub in ["conformers", "structures", "pockets"] {
        let p = out_dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| DtiError::io(&p, e))?;
    }

    let mut table = InteractionTable::default();
    let mut drug_family = Vec::new();
    for i in 0..spec.num_drugs {
        let family = i % spec.families;
        let id = format!("D{i:04}");
        let smiles = drug_smiles(family, &mut rng);
        let mol = parse_smiles(&smiles)?;
        let bonds: Vec<(usize, usize)> = mol.bonds.iter().map(|b| (b.begin.min(b.end), b.begin.max(b.end))).collect();
        let mut order: Vec<usize> = (0..bonds.len()).collect();
        order.sort_by_key(|&k| bonds[k]);
        let coords = embed_conformer(mol.num_atoms(), &bonds, &mut rng);
        let conf = Conformer {
            elements: mol.atoms.iter().map(|a| a.symbol.clone()).collect(),
            coords,
            bonds: order.iter().map(|&k| bonds[k]).collect(),
        };
        let orders: Vec<u8> = order
            .iter()
            .map(|&k| match mol.bonds[k].order {
                BondOrder::Single | BondOrder::Quadruple => 1,
                BondOrder::Double => 2,
                BondOrder::Triple => 3,
                BondOrder::Aromatic => 4,
            })
            .collect();
        write(&out_dir.join("conformers").join(format!("{id}.sdf")), &write_molblock(&id, &conf, &orders))?;
        table.drug_smiles.insert(id.clone(), smiles);
        drug_family.push((id, family));
    }

    let mut protein_family = Vec::new();
    for i in 0..spec.num_proteins {
        let family = i % spec.families;
        let id = format!("P{i:03}");
        let len = rng.random_range(spec.min_residues..=spec.max_residues);
        let (seq, motif_at) = protein_sequence(family, len, &mut rng);
        let (text, atoms) = pdb_text(&seq, &mut rng);
        write(&out_dir.join("structures").join(format!("{id}.pdb")), &text)?;
        let center_res = (motif_at + 5) as i32;
        let center = atoms
            .iter()
            .find(|a| a.res_seq == center_res && a.name == "CA")
            .map(|a| a.coords)
            .unwrap_or(atoms[0].coords);
        let far_res = ((motif_at + len / 2) % len) as i32 + 1;
        let far = atoms
            .iter()
            .find(|a| a.res_seq == far_res && a.name == "CA")
            .map(|a| a.coords)
            .unwrap_or(atoms[0].coords);
        let pockets = PocketFile {
            pockets: vec![
                PocketSpec {
                    atom_serials: pocket_around(&atoms, center, 8.0, 60),
                    residues: vec![],
                },
                PocketSpec {
                    atom_serials: pocket_around(&atoms, far, 7.0, 40),
                    residues: vec![],
                },
            ],
        };
        write(
            &out_dir.join("pockets").join(format!("{id}.json")),
            &serde_json::to_string_pretty(&pockets)?,
        )?;
        table.protein_sequences.insert(id.clone(), seq);
        protein_family.push((id, family));
    }

    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (d, fd) in &drug_family {
        for (p, fp) in &protein_family {
            let label = (fd == fp) as u8;
            let s = InteractionSample {
                drug_id: d.clone(),
                protein_id: p.clone(),
                label,
            };
            if label == 1 {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
    }
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let half = spec.num_pairs / 2;
    if pos.len() < half || neg.len() < spec.num_pairs - half {
        return Err(DtiError::Config(format!(
            "only {} positive / {} negative pairs available for {} requested",
            pos.len(),
            neg.len(),
            spec.num_pairs
        )));
    }
    let mut samples: Vec<InteractionSample> = pos[..half].iter().chain(&neg[..spec.num_pairs - half]).cloned().collect();
    samples.shuffle(&mut rng);
    table.samples = samples;
    // Keep only entities that appear in a sample.
    let used_d: std::collections::BTreeSet<String> = table.samples.iter().map(|s| s.drug_id.clone()).collect();
    let used_p: std::collections::BTreeSet<String> = table.samples.iter().map(|s| s.protein_id.clone()).collect();
    table.drug_smiles.retain(|k, _| used_d.contains(k));
    table.protein_sequences.retain(|k, _| used_p.contains(k));

    write(&out_dir.join("interactions.csv"), &write_interactions(&table, TableFormat::Csv)?)?;
    let mut readme = String::new();
    let _ = writeln!(readme, "synthetic dataset: {:?}", spec);
    write(&out_dir.join("SPEC.txt"), &readme)?;
    Ok(SyntheticSummary {
        drugs: table.drug_smiles.len(),
        proteins: table.protein_sequences.len(),
        positives: table.positives(),
        negatives: table.negatives(),
    })
}

/// Generate raw files under `dir/raw` and preprocess them.
pub fn build_archive(spec: &SyntheticSpec, dir: &Path) -> Result<DatasetArchive> {
    let raw = dir.join("raw");
    generate(spec, &raw)?;
    let (mut archive, _) = preprocess_dir(&raw, DEFAULT_POCKET_ATOM_CAP)?;
    archive.name = "synthetic".into();
    Ok(archive)
}
