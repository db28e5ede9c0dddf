//! Independent reference implementations and the measurement routines the
//! per-area tests and the acceptance gate share. Oracles work on plain
//! nested `Vec`s with explicit loops.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use candle_core::{Tensor, Var};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimodal_dti::config::{ModelConfig, SplitScheme};
use trimodal_dti::contrastive::{pairwise_contrastive_loss, trimodal_loss, ModalBatch};
use trimodal_dti::dataset::{PreparedData, Vocabularies};
use trimodal_dti::encoders::geometric::{GeoBatch, GeometricEncoder, Gvp, GvpParams};
use trimodal_dti::encoders::graph::{gcn_layer, tagcn_layer, AttentionPool, Propagator};
use trimodal_dti::encoders::sequence::{TransformerEncoder, TransformerParams};
use trimodal_dti::fusion::{bce_loss, FusionMlp};
use trimodal_dti::harness::metrics::compute_metrics;
use trimodal_dti::harness::splits::{fixed_split, make_splits};
use trimodal_dti::ingest::features::AMINO_ACIDS;
use trimodal_dti::ingest::mol3d::{build_3d_graph, parse_molblock, write_molblock, Conformer};
use trimodal_dti::ingest::pdb::{format_atom_line, parse_pdb, residue_graph, PdbAtom};
use trimodal_dti::ingest::pockets::load_pockets;
use trimodal_dti::ingest::{smiles_to_2d_graph, Molecular3DGraph, DRUG_EDGE_CUTOFF, RESIDUE_EDGE_CUTOFF};
use trimodal_dti::model::TriModalModel;
use trimodal_dti::nn::{device, to_rows, ForwardCtx, ParamStore};
use trimodal_dti::synthetic::{build_archive, embed_conformer, SyntheticSpec};
use trimodal_dti::Variant;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_mat(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

pub fn rand_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Symmetric 0/1 adjacency with zero diagonal; node 0 may end up isolated.
pub fn rand_adjacency(rng: &mut impl Rng, n: usize, p: f64) -> Mat {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                a[i][j] = 1.0;
                a[j][i] = 1.0;
            }
        }
    }
    a
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                c[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    c
}

pub fn tensor(m: &Mat) -> Tensor {
    let cols = m.first().map_or(0, |r| r.len());
    Tensor::from_vec(m.concat(), (m.len(), cols), &device()).unwrap()
}

pub fn tensor1(v: &[f64]) -> Tensor {
    Tensor::from_vec(v.to_vec(), (v.len(),), &device()).unwrap()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `D^{-1/2} A D^{-1/2}`, zero rows and columns for isolated nodes.
pub fn sym_normalize(a: &Mat) -> Mat {
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let n = a.len();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if d[i] > 0.0 && d[j] > 0.0 {
                p[i][j] = a[i][j] / (d[i] * d[j]).sqrt();
            }
        }
    }
    p
}

pub fn gcn_oracle(a: &Mat, z: &Mat, w: &Mat, b: &[f64]) -> Mat {
    let n = a.len();
    let mut at = a.clone();
    for (i, row) in at.iter_mut().enumerate().take(n) {
        row[i] += 1.0;
    }
    let pzw = matmul(&sym_normalize(&at), &matmul(z, w));
    pzw.iter()
        .map(|r| r.iter().zip(b).map(|(x, bb)| relu(x + bb)).collect())
        .collect()
}

pub fn tagcn_oracle(a: &Mat, x: &Mat, ws: &[Mat], b: &[f64]) -> Mat {
    let p = sym_normalize(a);
    let mut pk = x.clone();
    let mut acc = vec![vec![0.0; b.len()]; x.len()];
    for w in ws {
        pk = matmul(&p, &pk);
        let t = matmul(&pk, w);
        for (ar, tr) in acc.iter_mut().zip(&t) {
            for (av, tv) in ar.iter_mut().zip(tr) {
                *av += tv;
            }
        }
    }
    acc.iter()
        .map(|r| r.iter().zip(b).map(|(v, bb)| relu(v + bb)).collect())
        .collect()
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// One node through a GVP. `v[c]` is the c-th input vector channel.
/// `w_h: nu x h`, `w_u: h x nu'`, `w_v: (h + n_s) x m`.
pub fn gvp_oracle(
    s: &[f64],
    v: &[[f64; 3]],
    w_h: &Mat,
    w_u: &Mat,
    w_v: &Mat,
    b_v: &[f64],
    act: bool,
) -> (Vec<f64>, Vec<[f64; 3]>) {
    let h = w_h[0].len();
    let vh: Vec<[f64; 3]> = (0..h)
        .map(|k| {
            let mut out = [0.0; 3];
            for (c, vc) in v.iter().enumerate() {
                for ax in 0..3 {
                    out[ax] += w_h[c][k] * vc[ax];
                }
            }
            out
        })
        .collect();
    let mut cat: Vec<f64> = vh.iter().map(|x| norm3(*x)).collect();
    cat.extend_from_slice(s);
    let s_out: Vec<f64> = (0..b_v.len())
        .map(|m| {
            let z = b_v[m] + cat.iter().enumerate().map(|(i, x)| x * w_v[i][m]).sum::<f64>();
            if act {
                relu(z)
            } else {
                z
            }
        })
        .collect();
    let v_out: Vec<[f64; 3]> = (0..w_u[0].len())
        .map(|m| {
            let mut out = [0.0; 3];
            for (k, vk) in vh.iter().enumerate() {
                for ax in 0..3 {
                    out[ax] += w_u[k][m] * vk[ax];
                }
            }
            if act {
                let g = sigmoid(norm3(out));
                out = out.map(|x| x * g);
            }
            out
        })
        .collect();
    (s_out, v_out)
}

fn normalized(z: &Mat) -> Mat {
    z.iter()
        .map(|r| {
            let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            r.iter().map(|x| x / n).collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `L^a + L^b` written term by term with plain exponentials.
pub fn contrastive_oracle(za: &Mat, zb: &Mat, tau: f64) -> f64 {
    let (a, b) = (normalized(za), normalized(zb));
    let n = a.len();
    let one_side = |x: &Mat, y: &Mat| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let pos = (dot(&x[i], &y[i]) / tau).exp();
            let mut denom = 0.0;
            for j in 0..n {
                denom += (dot(&x[i], &y[j]) / tau).exp();
                if j != i {
                    denom += (dot(&x[i], &x[j]) / tau).exp();
                }
            }
            total += (pos / denom).ln();
        }
        -0.5 * total / n as f64
    };
    one_side(&a, &b) + one_side(&b, &a)
}

pub fn bce_oracle(y: &[f64], p: &[f64]) -> f64 {
    let eps = 1e-7;
    let mut s = 0.0;
    for (&yi, &pi) in y.iter().zip(p) {
        let q = pi.clamp(eps, 1.0 - eps);
        s += if yi == 1.0 { -q.ln() } else { -(1.0 - q).ln() };
    }
    s / y.len() as f64
}

/// Fraction of (positive, negative) pairs ordered correctly, ties 1/2.
pub fn auc_oracle(labels: &[u8], scores: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Step-wise AP: at every distinct score t, recall gained times precision
/// of the `score >= t` set, each counted from scratch.
pub fn ap_oracle(labels: &[u8], scores: &[f64]) -> f64 {
    let total_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    for t in thresholds {
        let at: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == t).collect();
        let above: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let gained = at.iter().filter(|&&i| labels[i] == 1).count() as f64;
        let tp = above.iter().filter(|&&i| labels[i] == 1).count() as f64;
        ap += gained / total_pos * tp / above.len() as f64;
    }
    ap
}

pub fn precision_oracle(labels: &[u8], scores: &[f64], threshold: f64) -> f64 {
    let pred: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= threshold).collect();
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().filter(|&&i| labels[i] == 1).count() as f64 / pred.len() as f64
}

/// Worst absolute deviation of each implementation from its oracle over
/// random fixtures with at most six nodes or samples.
pub fn oracle_errors(fixtures: usize) -> Vec<(&'static str, f64)> {
    let mut r = rng(20);
    let mut worst = vec![
        ("gcn_layer", 0.0f64),
        ("tagcn_layer", 0.0),
        ("gvp", 0.0),
        ("pairwise_contrastive", 0.0),
        ("trimodal_contrastive", 0.0),
        ("bce_loss", 0.0),
        ("compute_metrics", 0.0),
    ];
    let mut bump = |k: usize, e: f64| worst[k].1 = worst[k].1.max(e);
    for f in 0..fixtures {
        let n = r.random_range(1..=6);
        let (fi, fo) = (r.random_range(1..=5), r.random_range(1..=5));
        let a = rand_adjacency(&mut r, n, 0.5);
        let z = rand_mat(&mut r, n, fi);
        let w = rand_mat(&mut r, fi, fo);
        let b = rand_vec(&mut r, fo);
        let ours = gcn_layer(&Propagator::from_dense(&a, true).unwrap(), &tensor(&z), &tensor(&w), &tensor1(&b)).unwrap();
        bump(0, max_abs_diff(&to_rows(&ours).unwrap(), &gcn_oracle(&a, &z, &w, &b)));

        let k = r.random_range(1..=3);
        let ws: Vec<Mat> = (0..k).map(|_| rand_mat(&mut r, fi, fo)).collect();
        let wt: Vec<Tensor> = ws.iter().map(tensor).collect();
        let ours = tagcn_layer(&Propagator::from_dense(&a, false).unwrap(), &tensor(&z), &wt, &tensor1(&b)).unwrap();
        bump(1, max_abs_diff(&to_rows(&ours).unwrap(), &tagcn_oracle(&a, &z, &ws, &b)));

        let (ns, nu, ms, nuo) = (r.random_range(1..=4), r.random_range(1..=3), r.random_range(1..=4), r.random_range(1..=3));
        let act = f % 2 == 0;
        let mut store = ParamStore::new(f as u64);
        let g = Gvp::new(&mut store, "g", (ns, nu), (ms, nuo), act).unwrap();
        // Non-zero bias so the oracle sees it.
        let bias = rand_vec(&mut r, ms);
        store.get("g.w_v.bias").unwrap().set(&tensor1(&bias)).unwrap();
        let s = rand_mat(&mut r, n, ns);
        let v: Vec<Vec<[f64; 3]>> = (0..n)
            .map(|_| (0..nu).map(|_| [0, 1, 2].map(|_| r.random_range(-1.0..1.0))).collect())
            .collect();
        let vt: Vec<f64> = v.iter().flat_map(|node| (0..3).flat_map(move |ax| node.iter().map(move |c| c[ax]))).collect();
        let vt = Tensor::from_vec(vt, (n, 3, nu), &device()).unwrap();
        let (so, vo) = g.forward(&tensor(&s), &vt).unwrap();
        let so = to_rows(&so).unwrap();
        let vo = vo.to_vec3::<f64>().unwrap();
        let w_h = to_rows(&g.w_h).unwrap();
        let w_u = to_rows(&g.w_u).unwrap();
        let w_v = to_rows(&g.w_v.weight).unwrap();
        for i in 0..n {
            let (es, ev) = gvp_oracle(&s[i], &v[i], &w_h, &w_u, &w_v, &bias, act);
            bump(2, max_abs_diff(&[so[i].clone()].to_vec(), &[es].to_vec()));
            for (m, e) in ev.iter().enumerate() {
                for ax in 0..3 {
                    bump(2, (vo[i][ax][m] - e[ax]).abs());
                }
            }
        }

        let d = r.random_range(2..=6);
        let tau = [0.1, 0.5, 1.0][f % 3];
        let (z1, z2, z3) = (rand_mat(&mut r, n, d), rand_mat(&mut r, n, d), rand_mat(&mut r, n, d));
        let ours = pairwise_contrastive_loss(&tensor(&z1), &tensor(&z2), tau).unwrap().to_scalar::<f64>().unwrap();
        bump(3, (ours - contrastive_oracle(&z1, &z2, tau)).abs());
        let ours = trimodal_loss(&ModalBatch {
            z1: tensor(&z1),
            z2: tensor(&z2),
            z3: tensor(&z3),
            tau,
        })
        .unwrap()
        .to_scalar::<f64>()
        .unwrap();
        let expect = (contrastive_oracle(&z1, &z2, tau) + contrastive_oracle(&z2, &z3, tau) + contrastive_oracle(&z1, &z3, tau)) / 3.0;
        bump(4, (ours - expect).abs());

        let y: Vec<f64> = (0..n).map(|_| r.random_range(0..2) as f64).collect();
        let p: Vec<f64> = (0..n)
            .map(|i| if i == 0 && f % 5 == 0 { 1.0 - y[0] } else { r.random_range(0.0..1.0) })
            .collect();
        let ours = bce_loss(&tensor1(&y), &tensor1(&p)).unwrap().to_scalar::<f64>().unwrap();
        bump(5, (ours - bce_oracle(&y, &p)).abs());

        let m = r.random_range(2..=6);
        let mut labels: Vec<u8> = (0..m).map(|_| r.random_range(0..2)).collect();
        labels[0] = 1;
        labels[1] = 0;
        // Coarse scores so ties occur.
        let scores: Vec<f64> = (0..m).map(|_| r.random_range(0..5) as f64 / 4.0).collect();
        let got = compute_metrics(&labels, &scores, 0.5).unwrap();
        bump(6, (got.auc - auc_oracle(&labels, &scores)).abs());
        bump(6, (got.aupr - ap_oracle(&labels, &scores)).abs());
        bump(6, (got.precision - precision_oracle(&labels, &scores, 0.5)).abs());
    }
    worst
}

/// Norm-wise relative error between the backward-pass gradient and
/// central differences, over at most `max_entries` sampled coordinates per
/// variable; the worst variable is returned. A variable's denominator is
/// floored at 1e-3 of the largest gradient norm, so parameters with an
/// exactly zero gradient (a key bias under softmax) are judged on the
/// absolute difference instead of noise over noise.
pub fn grad_check(vars: &[Var], loss: &dyn Fn() -> Tensor, max_entries: usize, seed: u64) -> f64 {
    const H: f64 = 1e-6;
    let l = loss();
    let grads = l.backward().unwrap();
    let mut r = rng(seed);
    let mut per_var = Vec::new();
    for v in vars {
        let orig: Vec<f64> = v.as_tensor().flatten_all().unwrap().to_vec1().unwrap();
        let shape = v.as_tensor().shape().clone();
        let analytic: Vec<f64> = match grads.get(v.as_tensor()) {
            Some(g) => g.flatten_all().unwrap().to_vec1().unwrap(),
            None => vec![0.0; orig.len()],
        };
        let mut idx: Vec<usize> = (0..orig.len()).collect();
        if idx.len() > max_entries {
            idx.shuffle(&mut r);
            idx.truncate(max_entries);
        }
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for &k in &idx {
            let mut p = orig.clone();
            p[k] += H;
            v.set(&Tensor::from_vec(p.clone(), shape.clone(), &device()).unwrap()).unwrap();
            let lp = loss().to_scalar::<f64>().unwrap();
            p[k] -= 2.0 * H;
            v.set(&Tensor::from_vec(p, shape.clone(), &device()).unwrap()).unwrap();
            let lm = loss().to_scalar::<f64>().unwrap();
            v.set(&Tensor::from_vec(orig.clone(), shape.clone(), &device()).unwrap()).unwrap();
            let num = (lp - lm) / (2.0 * H);
            diff += (num - analytic[k]).powi(2);
            na += analytic[k].powi(2);
            nn += num * num;
        }
        per_var.push((diff.sqrt(), na.sqrt().max(nn.sqrt())));
    }
    let floor = 1e-3 * per_var.iter().map(|p| p.1).fold(0.0, f64::max);
    per_var
        .iter()
        .map(|&(d, scale)| if scale.max(floor) > 0.0 { d / scale.max(floor) } else { 0.0 })
        .fold(0.0, f64::max)
}

fn var(m: &Mat) -> Var {
    Var::from_tensor(&tensor(m)).unwrap()
}

fn weighted_sum(t: &Tensor, seed: u64) -> Tensor {
    let w = Tensor::from_vec(
        rand_vec(&mut rng(seed), t.elem_count()),
        t.shape().clone(),
        &device(),
    )
    .unwrap();
    t.mul(&w).unwrap().sum_all().unwrap()
}

/// A small molecule conformer with deterministic coordinates.
pub fn molecule_3d(smiles: &str, seed: u64) -> (Conformer, Molecular3DGraph) {
    let g2 = smiles_to_2d_graph(smiles).unwrap();
    let conf = Conformer {
        elements: g2.elements.clone(),
        coords: embed_conformer(g2.num_atoms(), &g2.bonds, &mut rng(seed)),
        bonds: g2.bonds.clone(),
    };
    let g3 = build_3d_graph(&conf, DRUG_EDGE_CUTOFF).unwrap();
    (conf, g3)
}

/// One layer from each encoder family plus the fusion head and the
/// contrastive loss, each against a 1e-4 bound.
pub fn layer_gradient_errors() -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();
    let mut r = rng(33);

    let a = rand_adjacency(&mut r, 5, 0.5);
    let z = var(&rand_mat(&mut r, 5, 4));
    let w = var(&rand_mat(&mut r, 4, 3));
    let b = Var::from_tensor(&tensor1(&rand_vec(&mut r, 3))).unwrap();
    let prop = Propagator::from_dense(&a, true).unwrap();
    let f = || weighted_sum(&gcn_layer(&prop, z.as_tensor(), w.as_tensor(), b.as_tensor()).unwrap(), 1);
    out.push(("gcn_layer", grad_check(&[z.clone(), w.clone(), b.clone()], &f, 64, 1)));

    let prop_t = Propagator::from_dense(&a, false).unwrap();
    let hops = [var(&rand_mat(&mut r, 4, 3)), var(&rand_mat(&mut r, 4, 3))];
    let f = || {
        let ws: Vec<Tensor> = hops.iter().map(|h| h.as_tensor().clone()).collect();
        weighted_sum(&tagcn_layer(&prop_t, z.as_tensor(), &ws, b.as_tensor()).unwrap(), 2)
    };
    let mut vars = hops.to_vec();
    vars.extend([z.clone(), b.clone()]);
    out.push(("tagcn_layer", grad_check(&vars, &f, 64, 2)));

    let mut store = ParamStore::new(4);
    let pool = AttentionPool::new(&mut store, "pool", 4).unwrap();
    let seg = Tensor::from_vec(vec![0u32, 0, 1, 1, 1], (5,), &device()).unwrap();
    let f = || weighted_sum(&pool.forward(z.as_tensor(), &seg, 2).unwrap(), 3);
    let mut vars = store.all_vars();
    vars.push(z.clone());
    out.push(("attention_pool", grad_check(&vars, &f, 64, 3)));

    let mut store = ParamStore::new(5);
    let g = Gvp::new(&mut store, "g", (3, 2), (4, 3), true).unwrap();
    let s = var(&rand_mat(&mut r, 4, 3));
    let v = Var::from_tensor(&Tensor::from_vec(rand_vec(&mut r, 4 * 3 * 2), (4, 3, 2), &device()).unwrap()).unwrap();
    let f = || {
        let (so, vo) = g.forward(s.as_tensor(), v.as_tensor()).unwrap();
        (weighted_sum(&so, 4) + weighted_sum(&vo, 5)).unwrap()
    };
    let mut vars = store.all_vars();
    vars.extend([s.clone(), v.clone()]);
    out.push(("gvp", grad_check(&vars, &f, 64, 4)));

    let (_, g3) = molecule_3d("CC(=O)Nc1ccccc1", 6);
    let mut store = ParamStore::new(6);
    let enc = GeometricEncoder::new(
        &mut store,
        "geo",
        GvpParams {
            layers: 1,
            scalar_hidden: 6,
            vector_hidden: 3,
        },
        4,
    )
    .unwrap();
    let batch = GeoBatch::new(&[&g3]).unwrap();
    let f = || weighted_sum(&enc.forward(&batch).unwrap(), 6);
    out.push(("gvp_message_passing", grad_check(&store.all_vars(), &f, 32, 5)));

    let mut store = ParamStore::new(7);
    let tp = TransformerParams {
        num_layers: 1,
        num_heads: 2,
        model_dim: 8,
        feedforward_dim: 16,
        dropout: 0.0,
    };
    let enc = TransformerEncoder::new(&mut store, "tf", tp).unwrap();
    let x = Var::from_tensor(&Tensor::from_vec(rand_vec(&mut r, 2 * 5 * 8), (2, 5, 8), &device()).unwrap()).unwrap();
    let mask = vec![vec![true; 5], vec![true, true, true, false, false]];
    let f = || {
        let y = enc.forward(x.as_tensor(), &mask, &mut ForwardCtx::eval()).unwrap();
        // Padded query rows are excluded; they are masked downstream.
        let keep = Tensor::from_vec(
            mask.iter().flatten().map(|&m| if m { 1.0 } else { 0.0 }).collect::<Vec<f64>>(),
            (2, 5, 1),
            &device(),
        )
        .unwrap();
        weighted_sum(&y.broadcast_mul(&keep).unwrap(), 7)
    };
    let mut vars = store.all_vars();
    vars.push(x.clone());
    out.push(("transformer_layer", grad_check(&vars, &f, 32, 6)));

    let mut store = ParamStore::new(8);
    let mlp = FusionMlp::new(&mut store, "mlp", 12, 8, 4, 0.0).unwrap();
    let feats = var(&rand_mat(&mut r, 4, 12));
    let y = tensor1(&[1.0, 0.0, 1.0, 0.0]);
    let f = || bce_loss(&y, &mlp.forward(feats.as_tensor(), &mut ForwardCtx::eval()).unwrap()).unwrap();
    let mut vars = store.all_vars();
    vars.push(feats.clone());
    out.push(("fusion_mlp_bce", grad_check(&vars, &f, 64, 7)));

    let za = var(&rand_mat(&mut r, 4, 5));
    let zb = var(&rand_mat(&mut r, 4, 5));
    let f = || pairwise_contrastive_loss(za.as_tensor(), zb.as_tensor(), 0.5).unwrap();
    out.push(("pairwise_contrastive", grad_check(&[za.clone(), zb.clone()], &f, 64, 8)));
    out
}

pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        embed_dim: 8,
        drug_vocab_size: 40,
        protein_vocab_size: 40,
        min_pair_freq: 2,
        drug_max_len: 16,
        protein_max_len: 24,
        transformer_layers: 1,
        attention_heads: 2,
        model_dim: 8,
        feedforward_dim: 16,
        gcn_hidden: 8,
        gcn_layers: 1,
        tagcn_hops: 2,
        tagcn_layers: 1,
        tagcn_hidden: 8,
        gvp_layers: 1,
        gvp_scalar_hidden: 8,
        gvp_vector_hidden: 4,
        mlp_hidden1: 16,
        mlp_hidden2: 8,
        dropout: 0.0,
        batch_size: 4,
        epochs: 2,
        runs: 1,
        repeats: 1,
        ..ModelConfig::default()
    }
}

pub fn tiny_spec() -> SyntheticSpec {
    SyntheticSpec {
        num_drugs: 2,
        num_proteins: 2,
        num_pairs: 4,
        families: 2,
        min_residues: 14,
        max_residues: 18,
        seed: 3,
    }
}

/// Relative gradient error of the combined loss with respect to every
/// parameter of a D = 8 model on two drugs and two proteins.
pub fn end_to_end_gradient_error(dir: &Path) -> f64 {
    let archive = build_archive(&tiny_spec(), dir).unwrap();
    let cfg = tiny_config();
    let all: Vec<usize> = (0..archive.samples.len()).collect();
    let data = PreparedData::new(&archive, Vocabularies::train_on(&archive, &all, &cfg).unwrap(), &cfg).unwrap();
    let model = TriModalModel::new(&cfg, data.vocabs.drug.len(), data.vocabs.protein.len(), 9).unwrap();
    // Zero-initialised biases put isolated pocket atoms exactly on the ReLU
    // kink, where one-sided slopes differ; move every shift off zero.
    let mut r = rng(10);
    for (name, v) in model.store.vars() {
        if name.ends_with("bias") || name.ends_with("beta") {
            let t = v.as_tensor();
            let jitter = rand_vec(&mut r, t.elem_count()).iter().map(|x| 0.1 * x).collect();
            v.set(&Tensor::from_vec(jitter, t.shape().clone(), &device()).unwrap()).unwrap();
        }
    }
    let drugs: Vec<_> = data.drugs.iter().collect();
    let proteins: Vec<_> = data.proteins.iter().collect();
    assert_eq!((drugs.len(), proteins.len()), (2, 2));
    let pairs = [(0, 0), (1, 1), (0, 1)];
    let labels = [1.0, 1.0, 0.0];
    let f = || {
        model
            .forward(&drugs, &proteins, &pairs, &labels, Variant::All, &mut ForwardCtx::eval())
            .unwrap()
            .total
    };
    grad_check(&model.store.all_vars(), &f, 4, 9)
}

/// 3x3 rotation from a random unit quaternion.
pub fn random_rotation(r: &mut impl Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = loop {
        let q = [0; 4].map(|_| r.random_range(-1.0..1.0f64));
        let n = q.iter().map(|x| x * x).sum::<f64>();
        if n > 1e-3 && n <= 1.0 {
            break q.map(|x| x / n.sqrt());
        }
    };
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn rotate(rm: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| rm[i][0] * p[0] + rm[i][1] * p[1] + rm[i][2] * p[2])
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Worst relative change of the graph embedding and worst relative error
/// of every layer's vector channels against the rotated reference, over
/// `trials` rigid motions of several molecules.
pub fn equivariance_errors(trials: usize) -> (f64, f64) {
    let mut store = ParamStore::new(12);
    let enc = GeometricEncoder::new(&mut store, "geo", GvpParams::default(), 32).unwrap();
    let mut r = rng(13);
    let (mut inv, mut eqv) = (0.0f64, 0.0f64);
    for (m, smi) in ["CC(=O)Oc1ccccc1C(=O)O", "CN1C=NC2=C1C(=O)N(C(=O)N2C)C", "OCC(N)C(=O)O"].iter().enumerate() {
        let (conf, g) = molecule_3d(smi, m as u64);
        let batch = GeoBatch::new(&[&g]).unwrap();
        let z0 = enc.forward(&batch).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let states0: Vec<Vec<Vec<Vec<f64>>>> = enc
            .node_states(&batch)
            .unwrap()
            .iter()
            .map(|(_, v)| v.to_vec3::<f64>().unwrap())
            .collect();
        for _ in 0..trials {
            let rm = random_rotation(&mut r);
            let t = [0; 3].map(|_| r.random_range(-20.0..20.0));
            let moved = Conformer {
                coords: conf
                    .coords
                    .iter()
                    .map(|&p| {
                        let q = rotate(&rm, p);
                        [q[0] + t[0], q[1] + t[1], q[2] + t[2]]
                    })
                    .collect(),
                ..conf.clone()
            };
            let g2 = build_3d_graph(&moved, DRUG_EDGE_CUTOFF).unwrap();
            assert_eq!(g2.edges, g.edges, "rigid motion changed the radius graph");
            let b2 = GeoBatch::new(&[&g2]).unwrap();
            let z = enc.forward(&b2).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
            inv = inv.max(rel(&z0, &z));
            for ((_, v), v0) in enc.node_states(&b2).unwrap().iter().zip(&states0) {
                let v = v.to_vec3::<f64>().unwrap();
                let (mut want, mut got) = (Vec::new(), Vec::new());
                for (n0, n1) in v0.iter().zip(&v) {
                    for c in 0..n0[0].len() {
                        want.extend(rotate(&rm, [n0[0][c], n0[1][c], n0[2][c]]));
                        got.extend([n1[0][c], n1[1][c], n1[2][c]]);
                    }
                }
                eqv = eqv.max(rel(&want, &got));
            }
        }
    }
    (inv, eqv)
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub drug_fixtures: usize,
    pub residue_fixtures: usize,
    pub mismatches: Vec<String>,
    pub bad_feature_lengths: usize,
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Pairs `i < j` accepted by `keep(distance)`, by exhaustive enumeration.
pub fn brute_force_edges(coords: &[[f64; 3]], keep: impl Fn(f64) -> bool) -> BTreeSet<(usize, usize)> {
    let mut e = BTreeSet::new();
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            if keep(dist(coords[i], coords[j])) {
                e.insert((i, j));
            }
        }
    }
    e
}

/// Random conformers (half of them through a mol-block round trip) and
/// random Cα traces (through PDB text) against exhaustive distance
/// filters, plus feature widths.
pub fn ingestion_fidelity(fixtures: usize, dir: &Path) -> IngestReport {
    let mut rep = IngestReport::default();
    let mut r = rng(40);
    let elements = ["C", "N", "O", "S", "Cl"];
    for f in 0..fixtures {
        let n = r.random_range(2..=30);
        let side = r.random_range(3.0..12.0);
        let mut coords: Vec<[f64; 3]> = (0..n).map(|_| [0; 3].map(|_| r.random_range(0.0..side))).collect();
        if f == 0 {
            // Exactly at the cutoff: strict comparison excludes it.
            coords[0] = [0.0, 0.0, 0.0];
            coords[1] = [DRUG_EDGE_CUTOFF, 0.0, 0.0];
        }
        let conf = Conformer {
            elements: (0..n).map(|_| elements[r.random_range(0..elements.len())].to_string()).collect(),
            coords,
            bonds: vec![],
        };
        let g = if f % 2 == 0 {
            build_3d_graph(&conf, DRUG_EDGE_CUTOFF).unwrap()
        } else {
            let text = write_molblock("fixture", &conf, &[]);
            build_3d_graph(&parse_molblock(&text, "fixture").unwrap(), DRUG_EDGE_CUTOFF).unwrap()
        };
        let oracle = brute_force_edges(&g.coords, |d| d < DRUG_EDGE_CUTOFF);
        let ours: BTreeSet<(usize, usize)> = g.undirected_edges().into_iter().collect();
        let directed: BTreeSet<(usize, usize)> = g.edges.iter().copied().collect();
        let symmetric = g.edges.iter().all(|&(a, b)| directed.contains(&(b, a)));
        if ours != oracle || !symmetric || g.edges.len() != 2 * oracle.len() {
            rep.mismatches.push(format!("3D fixture {f}: {} edges vs {} expected", ours.len(), oracle.len()));
        }
        rep.drug_fixtures += 1;

        let residues = r.random_range(2..=40);
        let mut atoms = Vec::new();
        let mut pos = [0.0f64; 3];
        for i in 0..residues {
            for ax in &mut pos {
                *ax += r.random_range(-4.0..4.0);
            }
            if f == 0 && i == 1 {
                pos = [RESIDUE_EDGE_CUTOFF, 0.0, 0.0];
            }
            if f == 0 && i == 0 {
                pos = [0.0, 0.0, 0.0];
            }
            atoms.push(PdbAtom {
                serial: i as u32 + 1,
                name: "CA".into(),
                res_name: AMINO_ACIDS[r.random_range(0..20)].into(),
                chain: 'A',
                res_seq: i as i32 + 1,
                insertion: ' ',
                coords: pos,
                element: "C".into(),
                hetero: false,
            });
        }
        let text: String = atoms.iter().map(|a| format_atom_line(a) + "\n").collect();
        let s = parse_pdb(&text, "fixture").unwrap();
        let rg = residue_graph(&s, RESIDUE_EDGE_CUTOFF, "fixture").unwrap();
        let oracle = brute_force_edges(&rg.calpha_coords, |d| d <= RESIDUE_EDGE_CUTOFF);
        let ours: BTreeSet<(usize, usize)> = rg.edges.iter().copied().collect();
        if ours != oracle || rg.num_residues() != residues || rg.edges.len() != ours.len() {
            rep.mismatches.push(format!("residue fixture {f}: {} edges vs {} expected", ours.len(), oracle.len()));
        }
        if f == 0 && !ours.contains(&(0, 1)) {
            rep.mismatches.push("residue pair exactly at the cutoff is missing".into());
        }
        rep.bad_feature_lengths += rg.residue_onehot.iter().filter(|row| row.len() != 21).count();
        rep.residue_fixtures += 1;
    }

    for smi in ["CC(=O)Oc1ccccc1C(=O)O", "C", "Brc1ccccc1I", "C[N+](C)(C)C"] {
        let g = smiles_to_2d_graph(smi).unwrap();
        rep.bad_feature_lengths += g.node_features.iter().filter(|f| f.len() != 75).count();
    }
    let spec = SyntheticSpec {
        num_drugs: 2,
        num_proteins: 2,
        num_pairs: 4,
        families: 2,
        ..SyntheticSpec::default()
    };
    let raw = dir.join("raw");
    trimodal_dti::synthetic::generate(&spec, &raw).unwrap();
    for entry in std::fs::read_dir(raw.join("structures")).unwrap() {
        let path = entry.unwrap().path();
        let id = path.file_stem().unwrap().to_string_lossy().to_string();
        let s = parse_pdb(&std::fs::read_to_string(&path).unwrap(), &id).unwrap();
        let pf = raw.join("pockets").join(format!("{id}.json"));
        for p in load_pockets(&id, Some(&pf), &s, 2000).unwrap().iter().chain(&load_pockets(&id, None, &s, 2000).unwrap()) {
            rep.bad_feature_lengths += p.node_features.iter().filter(|f| f.len() != 31).count();
        }
    }
    rep
}

/// Disjointness, coverage and ratio violations of the repeated scheme over
/// `seeds` seeds, and of the fixed scheme's 20% validation carve-out.
pub fn split_protocol_violations(seeds: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for n in [10usize, 11, 57, 100, 999, 4965, 14376] {
        for seed in 0..seeds {
            for s in make_splits(n, SplitScheme::Repeated811, seed, 2).unwrap() {
                let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
                all.sort_unstable();
                if all != (0..n).collect::<Vec<_>>() {
                    bad.push(format!("n={n} seed={seed}: not a partition"));
                }
                let near = |got: usize, frac: f64| (got as f64 - n as f64 * frac).abs() <= 1.0;
                if !near(s.train.len(), 0.8) || !near(s.val.len(), 0.1) || !near(s.test.len(), 0.1) {
                    bad.push(format!("n={n} seed={seed}: sizes {:?}", (s.train.len(), s.val.len(), s.test.len())));
                }
            }
        }
    }
    for (train_n, test_n) in [(100usize, 25usize), (1000, 300), (11500, 2876)] {
        for seed in 0..seeds.min(20) {
            let train: Vec<usize> = (0..train_n).collect();
            let test: Vec<usize> = (train_n..train_n + test_n).collect();
            let s = fixed_split(&train, &test, seed).unwrap();
            if s.val.len() * 5 != train_n {
                bad.push(format!("fixed split of {train_n}: {} validation samples", s.val.len()));
            }
            let mut tv: Vec<usize> = s.train.iter().chain(&s.val).copied().collect();
            tv.sort_unstable();
            if tv != train || s.test != test {
                bad.push(format!("fixed split of {train_n}: train/val does not partition the given train set"));
            }
        }
    }
    bad
}
