//! Rotate and translate a conformer and check that the geometric encoder's
//! graph embedding is unchanged while its vector channels rotate with it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimodal_dti::encoders::geometric::{GeoBatch, GeometricEncoder, GvpParams};
use trimodal_dti::ingest::mol3d::{build_3d_graph, Conformer};
use trimodal_dti::ingest::{smiles_to_2d_graph, DRUG_EDGE_CUTOFF};
use trimodal_dti::nn::{to_rows, ParamStore};
use trimodal_dti::synthetic::embed_conformer;

type Mat3 = [[f64; 3]; 3];

/// Uniform random rotation from a unit quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let mut q = [0.0f64; 4];
    loop {
        for x in &mut q {
            *x = rng.random_range(-1.0..1.0);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>();
        if n > 1e-3 && n <= 1.0 {
            q.iter_mut().for_each(|x| *x /= n.sqrt());
            break;
        }
    }
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn apply(r: &Mat3, p: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2])
}

fn rel_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        num += (x - y).powi(2);
        den += x * x;
    }
    (num / den.max(1e-300)).sqrt()
}

/// Largest relative change of the embedding over `trials` random rigid
/// motions, and largest relative error of the rotated vector channels.
pub fn run_example(trials: usize) -> trimodal_dti::Result<(f64, f64)> {
    let g2 = smiles_to_2d_graph("CC(=O)Oc1ccccc1C(=O)O")?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let conf = Conformer {
        elements: g2.elements.clone(),
        coords: embed_conformer(g2.num_atoms(), &g2.bonds, &mut rng),
        bonds: g2.bonds.clone(),
    };
    let mut store = ParamStore::new(11);
    let enc = GeometricEncoder::new(&mut store, "geo", GvpParams::default(), 16)?;
    let base = build_3d_graph(&conf, DRUG_EDGE_CUTOFF)?;
    let base_batch = GeoBatch::new(&[&base])?;
    let z0 = to_rows(&enc.forward(&base_batch)?)?;
    let (_, v0) = enc.node_states(&base_batch)?.pop().expect("layers");
    let v0 = v0.to_vec3::<f64>()?;

    let (mut worst_inv, mut worst_eq) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let r = random_rotation(&mut rng);
        let t = [0, 1, 2].map(|_| rng.random_range(-10.0..10.0));
        let moved = Conformer {
            coords: conf
                .coords
                .iter()
                .map(|&p| {
                    let q = apply(&r, p);
                    [q[0] + t[0], q[1] + t[1], q[2] + t[2]]
                })
                .collect(),
            ..conf.clone()
        };
        let g = build_3d_graph(&moved, DRUG_EDGE_CUTOFF)?;
        let batch = GeoBatch::new(&[&g])?;
        worst_inv = worst_inv.max(rel_diff(&z0, &to_rows(&enc.forward(&batch)?)?));
        let (_, v) = enc.node_states(&batch)?.pop().expect("layers");
        let v = v.to_vec3::<f64>()?;
        // v is (N, 3, channels): rotate each channel's 3-vector of the
        // reference and compare.
        let (mut expected, mut got) = (Vec::new(), Vec::new());
        for (node0, node) in v0.iter().zip(&v) {
            for c in 0..node0[0].len() {
                let rot = apply(&r, [node0[0][c], node0[1][c], node0[2][c]]);
                expected.push(rot.to_vec());
                got.push(vec![node[0][c], node[1][c], node[2][c]]);
            }
        }
        worst_eq = worst_eq.max(rel_diff(&expected, &got));
    }
    println!("embedding relative change: {worst_inv:.2e}");
    println!("vector channel rotation error: {worst_eq:.2e}");
    Ok((worst_inv, worst_eq))
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    run_example(10).map(|_| ())
}
