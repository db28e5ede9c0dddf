//! The six modality encoders: transformers over token sequences, GCN and
//! TAGCN over topological graphs, and GVP message passing over 3D drug
//! graphs.

pub mod geometric;
pub mod graph;
pub mod sequence;
