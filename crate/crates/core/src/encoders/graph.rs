//! GCN (self-loop, symmetric normalisation), TAGCN and gated attention
//! pooling, plus the three topological encoders built from them.

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};
use crate::ingest::{
    Molecular2DGraph, PocketGraph, ResidueContactGraph, ATOM_FEATURE_DIM, POCKET_FEATURE_DIM,
    RESIDUE_FEATURE_DIM,
};
use crate::nn::{device, sigmoid, tensor2, Linear, ParamStore};

/// Sparse normalised propagation operator `P = D^{-1/2} A D^{-1/2}` stored
/// as weighted directed edges, possibly over a disjoint union of graphs.
#[derive(Debug, Clone)]
pub struct Propagator {
    num_nodes: usize,
    src: Tensor,
    dst: Tensor,
    weight: Tensor,
    num_entries: usize,
}

impl Propagator {
    fn from_entries(num_nodes: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut deg = vec![0.0; num_nodes];
        for &(i, _, a) in entries {
            deg[i] += a;
        }
        let inv: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
        let src: Vec<u32> = entries.iter().map(|e| e.1 as u32).collect();
        let dst: Vec<u32> = entries.iter().map(|e| e.0 as u32).collect();
        let w: Vec<f64> = entries.iter().map(|&(i, j, a)| inv[i] * a * inv[j]).collect();
        let n = entries.len();
        Ok(Propagator {
            num_nodes,
            src: Tensor::from_vec(src, (n,), &device())?,
            dst: Tensor::from_vec(dst, (n,), &device())?,
            weight: Tensor::from_vec(w, (n, 1), &device())?,
            num_entries: n,
        })
    }

    /// From a dense (possibly weighted) adjacency. With `self_loops` the
    /// identity is added first, giving the GCN operator.
    pub fn from_dense(adjacency: &[Vec<f64>], self_loops: bool) -> Result<Self> {
        let n = adjacency.len();
        let mut entries = Vec::new();
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != n {
                return Err(DtiError::Dimension(format!("adjacency row {i} has {} columns, expected {n}", row.len())));
            }
            for (j, &a) in row.iter().enumerate() {
                let a = if self_loops && i == j { a + 1.0 } else { a };
                if a != 0.0 {
                    entries.push((i, j, a));
                }
            }
        }
        Self::from_entries(n, &entries)
    }

    /// From undirected edges `(i, j)`; each appears once.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)], self_loops: bool) -> Result<Self> {
        let mut entries = Vec::with_capacity(edges.len() * 2 + num_nodes);
        for &(i, j) in edges {
            if i >= num_nodes || j >= num_nodes {
                return Err(DtiError::Bounds {
                    what: "edge endpoint",
                    index: i.max(j),
                    size: num_nodes,
                });
            }
            entries.push((i, j, 1.0));
            entries.push((j, i, 1.0));
        }
        if self_loops {
            entries.extend((0..num_nodes).map(|i| (i, i, 1.0)));
        }
        Self::from_entries(num_nodes, &entries)
    }

    /// Block-diagonal union of per-graph edge lists.
    pub fn from_graphs(graphs: &[(usize, &[(usize, usize)])], self_loops: bool) -> Result<Self> {
        let mut offset = 0;
        let mut edges = Vec::new();
        for &(n, e) in graphs {
            edges.extend(e.iter().map(|&(i, j)| (i + offset, j + offset)));
            offset += n;
        }
        Self::from_edges(offset, &edges, self_loops)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// `P x` for `x: (num_nodes, F)`.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let (n, f) = x.dims2()?;
        if n != self.num_nodes {
            return Err(DtiError::Dimension(format!("{n} node rows, propagator has {}", self.num_nodes)));
        }
        let zeros = Tensor::zeros((n, f), x.dtype(), x.device())?;
        if self.num_entries == 0 {
            return Ok(zeros);
        }
        let msg = x.index_select(&self.src, 0)?.broadcast_mul(&self.weight)?;
        Ok(zeros.index_add(&self.dst, &msg, 0)?)
    }
}

fn check_width(x: &Tensor, w: &Tensor) -> Result<()> {
    let (_, f) = x.dims2()?;
    let (i, _) = w.dims2()?;
    if f != i {
        return Err(DtiError::Dimension(format!("features of width {f} against weight with {i} rows")));
    }
    Ok(())
}

/// `ReLU(P̃ Z W + b)` where `P̃` is the self-loop normalised operator.
pub fn gcn_layer(prop: &Propagator, z: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_width(z, w)?;
    Ok(prop.apply(&z.matmul(w)?)?.broadcast_add(b)?.relu()?)
}

/// `ReLU(Σ_{k=1..K} P^k X W_k + b)`.
pub fn tagcn_layer(prop: &Propagator, x: &Tensor, hops: &[Tensor], b: &Tensor) -> Result<Tensor> {
    if hops.is_empty() {
        return Err(DtiError::Config("TAGCN needs K >= 1".into()));
    }
    let mut px = x.clone();
    let mut acc: Option<Tensor> = None;
    for w in hops {
        check_width(x, w)?;
        px = prop.apply(&px)?;
        let term = px.matmul(w)?;
        acc = Some(match acc {
            Some(a) => (a + term)?,
            None => term,
        });
    }
    Ok(acc.expect("K >= 1").broadcast_add(b)?.relu()?)
}

/// Per-graph sum of `(N, F)` rows; `segments[n]` is node n's graph.
pub fn segment_sum(x: &Tensor, segments: &Tensor, num_segments: usize) -> Result<Tensor> {
    let (_, f) = x.dims2()?;
    let zeros = Tensor::zeros((num_segments, f), x.dtype(), x.device())?;
    Ok(zeros.index_add(segments, x, 0)?)
}

/// Per-graph mean with the node counts supplied.
pub fn segment_mean(x: &Tensor, segments: &Tensor, counts: &[usize]) -> Result<Tensor> {
    if counts.contains(&0) {
        return Err(DtiError::Invalid("mean pooling over an empty graph".into()));
    }
    let inv: Vec<f64> = counts.iter().map(|&c| 1.0 / c as f64).collect();
    let inv = Tensor::from_vec(inv, (counts.len(), 1), &device())?;
    Ok(segment_sum(x, segments, counts.len())?.broadcast_mul(&inv)?)
}

fn segment_ids(counts: &[usize]) -> Result<Tensor> {
    let ids: Vec<u32> = counts
        .iter()
        .enumerate()
        .flat_map(|(g, &c)| std::iter::repeat_n(g as u32, c))
        .collect();
    let n = ids.len();
    Ok(Tensor::from_vec(ids, (n,), &device())?)
}

#[derive(Debug, Clone)]
pub struct AttentionPool {
    pub gate: Linear,
    pub transform: Linear,
}

impl AttentionPool {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        Ok(AttentionPool {
            gate: Linear::new(store, &format!("{name}.gate"), dim, 1, true)?,
            transform: Linear::new(store, &format!("{name}.transform"), dim, dim, true)?,
        })
    }

    /// Pool every segment: `Σ_i sigmoid(gate(x_i)) · transform(x_i)`.
    pub fn forward(&self, x: &Tensor, segments: &Tensor, num_segments: usize) -> Result<Tensor> {
        let g = sigmoid(&self.gate.forward(x)?)?;
        let h = self.transform.forward(x)?.broadcast_mul(&g)?;
        segment_sum(&h, segments, num_segments)
    }
}

/// Single-graph attention pooling: `(M, h)` to `(h)`.
pub fn attention_pool(node_feats: &Tensor, pool: &AttentionPool) -> Result<Tensor> {
    let (m, _) = node_feats.dims2()?;
    if m == 0 {
        return Err(DtiError::Invalid("attention pooling over zero nodes".into()));
    }
    let seg = Tensor::zeros((m,), candle_core::DType::U32, &device())?;
    Ok(pool.forward(node_feats, &seg, 1)?.squeeze(0)?)
}

#[derive(Debug, Clone)]
pub struct GcnLayerParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Input projection, `num_layers` GCN layers, mean pool, output projection.
#[derive(Debug, Clone)]
pub struct GcnEncoder {
    pub input: Linear,
    pub layers: Vec<GcnLayerParams>,
    pub output: Linear,
}

impl GcnEncoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        hidden: usize,
        num_layers: usize,
        out_dim: usize,
    ) -> Result<Self> {
        if num_layers == 0 {
            return Err(DtiError::Config("GCN needs at least one layer".into()));
        }
        let layers = (0..num_layers)
            .map(|l| {
                Ok(GcnLayerParams {
                    weight: store.glorot(&format!("{name}.gcn{l}.weight"), hidden, hidden)?,
                    bias: store.constant(&format!("{name}.gcn{l}.bias"), &[hidden], 0.0)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GcnEncoder {
            input: Linear::new(store, &format!("{name}.input"), in_dim, hidden, true)?,
            layers,
            output: Linear::new(store, &format!("{name}.output"), hidden, out_dim, true)?,
        })
    }

    /// Node representations after the GCN stack.
    pub fn node_states(&self, x: &Tensor, prop: &Propagator) -> Result<Tensor> {
        let mut z = self.input.forward(x)?;
        for l in &self.layers {
            z = gcn_layer(prop, &z, &l.weight, &l.bias)?;
        }
        Ok(z)
    }

    /// Encode a batch of graphs given as `(features, edges)`: `(G, out_dim)`.
    pub fn forward_batch(&self, graphs: &[(&[Vec<f64>], &[(usize, usize)])]) -> Result<Tensor> {
        let counts: Vec<usize> = graphs.iter().map(|g| g.0.len()).collect();
        if counts.contains(&0) {
            return Err(DtiError::Invalid("graph with zero nodes".into()));
        }
        let in_dim = self.input.in_dim();
        let rows: Vec<Vec<f64>> = graphs.iter().flat_map(|g| g.0.iter().cloned()).collect();
        let x = tensor2(&rows, in_dim)?;
        let shapes: Vec<(usize, &[(usize, usize)])> = graphs.iter().map(|g| (g.0.len(), g.1)).collect();
        let prop = Propagator::from_graphs(&shapes, true)?;
        let z = self.node_states(&x, &prop)?;
        let pooled = segment_mean(&z, &segment_ids(&counts)?, &counts)?;
        self.output.forward(&pooled)
    }
}

pub fn encode_drug_2d(graph: &Molecular2DGraph, encoder: &GcnEncoder) -> Result<Tensor> {
    if encoder.input.in_dim() != ATOM_FEATURE_DIM {
        return Err(DtiError::Dimension("drug GCN input must be 75 wide".into()));
    }
    Ok(encoder
        .forward_batch(&[(&graph.node_features, &graph.bonds)])?
        .squeeze(0)?)
}

pub fn encode_protein_3d(graph: &ResidueContactGraph, encoder: &GcnEncoder) -> Result<Tensor> {
    if encoder.input.in_dim() != RESIDUE_FEATURE_DIM {
        return Err(DtiError::Dimension("residue GCN input must be 21 wide".into()));
    }
    Ok(encoder
        .forward_batch(&[(&graph.residue_onehot, &graph.edges)])?
        .squeeze(0)?)
}

#[derive(Debug, Clone)]
pub struct TagcnLayerParams {
    pub hops: Vec<Tensor>,
    pub bias: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagcnParams {
    pub hops: usize,
    pub layers: usize,
    pub hidden: usize,
}

impl Default for TagcnParams {
    fn default() -> Self {
        TagcnParams {
            hops: 2,
            layers: 2,
            hidden: 64,
        }
    }
}

/// TAGCN stack over each pocket, attention pooling per pocket, mean over a
/// protein's pockets, then a fully connected layer.
#[derive(Debug, Clone)]
pub struct PocketEncoder {
    pub layers: Vec<TagcnLayerParams>,
    pub pool: AttentionPool,
    pub output: Linear,
}

impl PocketEncoder {
    pub fn new(store: &mut ParamStore, name: &str, params: TagcnParams, out_dim: usize) -> Result<Self> {
        if params.hops == 0 || params.layers == 0 {
            return Err(DtiError::Config("TAGCN needs K >= 1 and at least one layer".into()));
        }
        let mut layers = Vec::with_capacity(params.layers);
        for l in 0..params.layers {
            let fan_in = if l == 0 { POCKET_FEATURE_DIM } else { params.hidden };
            let hops = (0..params.hops)
                .map(|k| store.glorot(&format!("{name}.tagcn{l}.hop{k}"), fan_in, params.hidden))
                .collect::<Result<Vec<_>>>()?;
            let bias = store.constant(&format!("{name}.tagcn{l}.bias"), &[params.hidden], 0.0)?;
            layers.push(TagcnLayerParams { hops, bias });
        }
        Ok(PocketEncoder {
            layers,
            pool: AttentionPool::new(store, &format!("{name}.pool"), params.hidden)?,
            output: Linear::new(store, &format!("{name}.output"), params.hidden, out_dim, true)?,
        })
    }

    /// Pooled vector per pocket: `(P, hidden)`.
    pub fn pocket_vectors(&self, pockets: &[&PocketGraph]) -> Result<Tensor> {
        let counts: Vec<usize> = pockets.iter().map(|p| p.node_features.len()).collect();
        if counts.contains(&0) {
            return Err(DtiError::Invalid("pocket with zero atoms".into()));
        }
        let rows: Vec<Vec<f64>> = pockets.iter().flat_map(|p| p.node_features.iter().cloned()).collect();
        let mut h = tensor2(&rows, POCKET_FEATURE_DIM)?;
        let shapes: Vec<(usize, &[(usize, usize)])> =
            pockets.iter().map(|p| (p.node_features.len(), p.edges.as_slice())).collect();
        let prop = Propagator::from_graphs(&shapes, false)?;
        for l in &self.layers {
            h = tagcn_layer(&prop, &h, &l.hops, &l.bias)?;
        }
        self.pool.forward(&h, &segment_ids(&counts)?, pockets.len())
    }

    /// Encode a batch of proteins, each given by its pocket list: `(B, out_dim)`.
    pub fn forward_batch(&self, proteins: &[&[PocketGraph]]) -> Result<Tensor> {
        let counts: Vec<usize> = proteins.iter().map(|p| p.len()).collect();
        if counts.contains(&0) {
            return Err(DtiError::Invalid("protein with an empty pocket list".into()));
        }
        let all: Vec<&PocketGraph> = proteins.iter().flat_map(|p| p.iter()).collect();
        let vecs = self.pocket_vectors(&all)?;
        let pooled = segment_mean(&vecs, &segment_ids(&counts)?, &counts)?;
        self.output.forward(&pooled)
    }
}

pub fn encode_protein_pockets(pockets: &[PocketGraph], encoder: &PocketEncoder) -> Result<Tensor> {
    Ok(encoder.forward_batch(&[pockets])?.squeeze(0)?)
}
