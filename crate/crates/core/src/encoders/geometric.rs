//! Geometric vector perceptrons and GVP message passing over the 3D drug
//! graph.
//!
//! Vector features are stored as `(N, 3, channels)` tensors so channel
//! mixing is a right-multiplication that never touches the spatial axis.

use candle_core::{Tensor, D};
use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};
use crate::ingest::mol3d::{EDGE_SCALAR_DIM, EDGE_VECTOR_DIM, NODE_SCALAR_DIM, NODE_VECTOR_DIM};
use crate::ingest::Molecular3DGraph;
use crate::nn::{device, sigmoid, tensor2, LayerNorm, Linear, ParamStore};

/// Floor inside the square root of vector norms; keeps gradients finite at 0.
pub const NORM_EPS: f64 = 1e-16;

/// Row-wise L2 norm over the spatial axis: `(N, 3, c) -> (N, c)`.
pub fn vector_norm(v: &Tensor) -> Result<Tensor> {
    Ok(v.sqr()?.sum(1)?.maximum(NORM_EPS)?.sqrt()?)
}

#[derive(Debug, Clone)]
pub struct Gvp {
    /// `nu x h`
    pub w_h: Tensor,
    /// `h x nu'`
    pub w_u: Tensor,
    /// `(h + n_s) -> m_s`
    pub w_v: Linear,
    pub scalar_act: bool,
    pub vector_gate: bool,
}

impl Gvp {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        (n_s, nu): (usize, usize),
        (m_s, nu_out): (usize, usize),
        activations: bool,
    ) -> Result<Self> {
        let h = nu.max(nu_out);
        Ok(Gvp {
            w_h: store.glorot(&format!("{name}.w_h"), nu, h)?,
            w_u: store.glorot(&format!("{name}.w_u"), h, nu_out)?,
            w_v: Linear::new(store, &format!("{name}.w_v"), h + n_s, m_s, true)?,
            scalar_act: activations,
            vector_gate: activations,
        })
    }

    pub fn scalar_in(&self) -> usize {
        self.w_v.in_dim() - self.w_h.dims()[1]
    }

    pub fn vector_in(&self) -> usize {
        self.w_h.dims()[0]
    }

    /// `s: (N, n_s)`, `v: (N, 3, nu)` to `(N, m_s)`, `(N, 3, nu')`.
    pub fn forward(&self, s: &Tensor, v: &Tensor) -> Result<(Tensor, Tensor)> {
        let (n, ns) = s.dims2()?;
        let (nv, three, nu) = v.dims3()?;
        if nv != n || three != 3 || ns != self.scalar_in() || nu != self.vector_in() {
            return Err(DtiError::Dimension(format!(
                "GVP expects ({}, 3x{}) inputs, got ({ns}, {three}x{nu})",
                self.scalar_in(),
                self.vector_in()
            )));
        }
        let vh = v.broadcast_matmul(&self.w_h)?;
        let s_cat = Tensor::cat(&[&vector_norm(&vh)?, s], 1)?;
        let mut s_out = self.w_v.forward(&s_cat)?;
        if self.scalar_act {
            s_out = s_out.relu()?;
        }
        let vu = vh.broadcast_matmul(&self.w_u)?;
        let v_out = if self.vector_gate {
            let gate = sigmoid(&vector_norm(&vu)?)?.unsqueeze(1)?;
            vu.broadcast_mul(&gate)?
        } else {
            vu
        };
        Ok((s_out, v_out))
    }
}

/// One GVP applied to a single node: `s: (n_s)`, `v: (nu x 3)` rows.
pub fn gvp(s: &Tensor, v: &Tensor, params: &Gvp) -> Result<(Tensor, Tensor)> {
    let s = s.unsqueeze(0)?;
    let v = v.t()?.unsqueeze(0)?;
    let (so, vo) = params.forward(&s, &v)?;
    Ok((so.squeeze(0)?, vo.squeeze(0)?.t()?))
}

/// Scalar LayerNorm plus direction-preserving vector normalisation.
#[derive(Debug, Clone)]
pub struct GvpLayerNorm {
    pub scalar: LayerNorm,
}

impl GvpLayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, scalar_dim: usize) -> Result<Self> {
        Ok(GvpLayerNorm {
            scalar: LayerNorm::new(store, name, scalar_dim)?,
        })
    }

    pub fn forward(&self, s: &Tensor, v: &Tensor) -> Result<(Tensor, Tensor)> {
        let s = self.scalar.forward(s)?;
        let rms = v
            .sqr()?
            .sum(1)?
            .mean_keepdim(D::Minus1)?
            .maximum(NORM_EPS)?
            .sqrt()?
            .unsqueeze(2)?;
        Ok((s, v.broadcast_div(&rms)?))
    }
}

/// Message function `g`: a stack of GVPs applied to
/// `concat(v_j, edge_ji)`; the last one is linear.
#[derive(Debug, Clone)]
pub struct MessageStack {
    pub gvps: Vec<Gvp>,
}

impl MessageStack {
    pub fn forward(&self, s: &Tensor, v: &Tensor) -> Result<(Tensor, Tensor)> {
        let (mut s, mut v) = (s.clone(), v.clone());
        for g in &self.gvps {
            (s, v) = g.forward(&s, &v)?;
        }
        Ok((s, v))
    }
}

/// Directed edges as index tensors plus per-target in-degree.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    pub src: Tensor,
    pub dst: Tensor,
    pub inv_degree: Tensor,
    pub num_edges: usize,
}

impl EdgeIndex {
    pub fn new(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut deg = vec![0usize; num_nodes];
        for &(s, t) in edges {
            if s >= num_nodes || t >= num_nodes {
                return Err(DtiError::Bounds {
                    what: "edge endpoint",
                    index: s.max(t),
                    size: num_nodes,
                });
            }
            deg[t] += 1;
        }
        let inv: Vec<f64> = deg.iter().map(|&d| if d > 0 { 1.0 / d as f64 } else { 0.0 }).collect();
        let e = edges.len();
        Ok(EdgeIndex {
            src: Tensor::from_vec(edges.iter().map(|x| x.0 as u32).collect::<Vec<_>>(), (e,), &device())?,
            dst: Tensor::from_vec(edges.iter().map(|x| x.1 as u32).collect::<Vec<_>>(), (e,), &device())?,
            inv_degree: Tensor::from_vec(inv, (num_nodes, 1), &device())?,
            num_edges: e,
        })
    }
}

/// Message `g(concat(v_j, e_ji))` for every edge at once.
pub fn gvp_message(
    node_s: &Tensor,
    node_v: &Tensor,
    edge_s: &Tensor,
    edge_v: &Tensor,
    index: &EdgeIndex,
    g: &MessageStack,
) -> Result<(Tensor, Tensor)> {
    let s_j = node_s.index_select(&index.src, 0)?;
    let v_j = node_v.index_select(&index.src, 0)?;
    let s = Tensor::cat(&[&s_j, edge_s], 1)?;
    let v = Tensor::cat(&[&v_j, edge_v], 2)?;
    g.forward(&s, &v)
}

/// Neighbour-mean of messages, residual add, then GVP layer norm. Nodes
/// without incoming edges receive a zero message term.
pub fn gvp_node_update(
    node_s: &Tensor,
    node_v: &Tensor,
    msg_s: &Tensor,
    msg_v: &Tensor,
    index: &EdgeIndex,
    norm: &GvpLayerNorm,
) -> Result<(Tensor, Tensor)> {
    let (n, _) = node_s.dims2()?;
    let (agg_s, agg_v) = if index.num_edges == 0 {
        (node_s.zeros_like()?, node_v.zeros_like()?)
    } else {
        let agg_s = node_s.zeros_like()?.index_add(&index.dst, msg_s, 0)?;
        let agg_v = node_v.zeros_like()?.index_add(&index.dst, msg_v, 0)?;
        (
            agg_s.broadcast_mul(&index.inv_degree)?,
            agg_v.broadcast_mul(&index.inv_degree.reshape((n, 1, 1))?)?,
        )
    };
    norm.forward(&(node_s + agg_s)?, &(node_v + agg_v)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GvpParams {
    pub layers: usize,
    pub scalar_hidden: usize,
    pub vector_hidden: usize,
}

impl Default for GvpParams {
    fn default() -> Self {
        GvpParams {
            layers: 3,
            scalar_hidden: 64,
            vector_hidden: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MpLayer {
    pub message: MessageStack,
    pub norm: GvpLayerNorm,
}

/// Input GVP, message-passing layers, global add pool of node scalars and
/// a projection to the shared width.
#[derive(Debug, Clone)]
pub struct GeometricEncoder {
    pub input: Gvp,
    pub layers: Vec<MpLayer>,
    pub output: Linear,
    pub params: GvpParams,
}

/// Batched tensors for a disjoint union of 3D graphs.
#[derive(Debug, Clone)]
pub struct GeoBatch {
    pub node_s: Tensor,
    pub node_v: Tensor,
    pub edge_s: Tensor,
    pub edge_v: Tensor,
    pub index: EdgeIndex,
    pub segments: Tensor,
    pub num_graphs: usize,
}

fn vectors_tensor(rows: &[&Vec<[f64; 3]>], channels: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(rows.len() * 3 * channels);
    for r in rows {
        if r.len() != channels {
            return Err(DtiError::Dimension(format!("{} vector channels, expected {channels}", r.len())));
        }
        for axis in 0..3 {
            data.extend(r.iter().map(|vec| vec[axis]));
        }
    }
    Ok(Tensor::from_vec(data, (rows.len(), 3, channels), &device())?)
}

impl GeoBatch {
    pub fn new(graphs: &[&Molecular3DGraph]) -> Result<Self> {
        let mut node_s = Vec::new();
        let mut node_v = Vec::new();
        let mut edge_s = Vec::new();
        let mut edge_v = Vec::new();
        let mut edges = Vec::new();
        let mut seg = Vec::new();
        let mut offset = 0;
        for (g, graph) in graphs.iter().enumerate() {
            if graph.num_atoms() == 0 {
                return Err(DtiError::Invalid("3D graph with zero atoms".into()));
            }
            node_s.extend(graph.node_scalars.iter().cloned());
            node_v.extend(graph.node_vectors.iter());
            edge_s.extend(graph.edge_scalars.iter().cloned());
            edge_v.extend(graph.edge_vectors.iter());
            edges.extend(graph.edges.iter().map(|&(s, t)| (s + offset, t + offset)));
            seg.extend(std::iter::repeat_n(g as u32, graph.num_atoms()));
            offset += graph.num_atoms();
        }
        let e = edges.len();
        Ok(GeoBatch {
            node_s: tensor2(&node_s, NODE_SCALAR_DIM)?,
            node_v: vectors_tensor(&node_v, NODE_VECTOR_DIM)?,
            edge_s: if e == 0 {
                Tensor::zeros((0, EDGE_SCALAR_DIM), crate::nn::DTYPE, &device())?
            } else {
                tensor2(&edge_s, EDGE_SCALAR_DIM)?
            },
            edge_v: vectors_tensor(&edge_v, EDGE_VECTOR_DIM)?,
            index: EdgeIndex::new(offset, &edges)?,
            segments: Tensor::from_vec(seg, (offset,), &device())?,
            num_graphs: graphs.len(),
        })
    }
}

impl GeometricEncoder {
    pub fn new(store: &mut ParamStore, name: &str, params: GvpParams, out_dim: usize) -> Result<Self> {
        let (hs, hv) = (params.scalar_hidden, params.vector_hidden);
        let input = Gvp::new(store, &format!("{name}.input"), (NODE_SCALAR_DIM, NODE_VECTOR_DIM), (hs, hv), false)?;
        let layers = (0..params.layers)
            .map(|l| {
                let p = format!("{name}.mp{l}");
                Ok(MpLayer {
                    message: MessageStack {
                        gvps: vec![
                            Gvp::new(
                                store,
                                &format!("{p}.msg0"),
                                (hs + EDGE_SCALAR_DIM, hv + EDGE_VECTOR_DIM),
                                (hs, hv),
                                true,
                            )?,
                            Gvp::new(store, &format!("{p}.msg1"), (hs, hv), (hs, hv), false)?,
                        ],
                    },
                    norm: GvpLayerNorm::new(store, &format!("{p}.norm"), hs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GeometricEncoder {
            input,
            layers,
            output: Linear::new(store, &format!("{name}.output"), hs, out_dim, true)?,
            params,
        })
    }

    /// Node scalar and vector states after every layer, input GVP first.
    pub fn node_states(&self, batch: &GeoBatch) -> Result<Vec<(Tensor, Tensor)>> {
        let mut states = Vec::with_capacity(self.layers.len() + 1);
        let (mut s, mut v) = self.input.forward(&batch.node_s, &batch.node_v)?;
        states.push((s.clone(), v.clone()));
        for layer in &self.layers {
            let (ms, mv) = if batch.index.num_edges == 0 {
                (s.zeros_like()?, v.zeros_like()?)
            } else {
                gvp_message(&s, &v, &batch.edge_s, &batch.edge_v, &batch.index, &layer.message)?
            };
            (s, v) = gvp_node_update(&s, &v, &ms, &mv, &batch.index, &layer.norm)?;
            states.push((s.clone(), v.clone()));
        }
        Ok(states)
    }

    /// `(G, out_dim)` graph embeddings.
    pub fn forward(&self, batch: &GeoBatch) -> Result<Tensor> {
        let states = self.node_states(batch)?;
        let (s, _) = states.last().expect("input state always present");
        let pooled = crate::encoders::graph::segment_sum(s, &batch.segments, batch.num_graphs)?;
        self.output.forward(&pooled)
    }
}

pub fn encode_drug_3d(graph: &Molecular3DGraph, encoder: &GeometricEncoder) -> Result<Tensor> {
    let batch = GeoBatch::new(&[graph])?;
    Ok(encoder.forward(&batch)?.squeeze(0)?)
}
