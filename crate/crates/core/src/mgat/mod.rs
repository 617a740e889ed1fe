//! Heterogeneous text / CPC / citation graph and the cross-modal attention
//! layers that update its text nodes.
//!
//! For an edge from `p` (modality `m₁`) into text node `q` the coefficient is
//!
//! ```text
//! e(m′) = LeakyReLU(a[m₁, m′] · [h_p W_{m₁} ‖ h_q W_{m′}])
//! α     = softmax over m′ ∈ present modalities, read at m′ = text
//! ```
//!
//! and the update is `h_q ← ELU(Σ_p α · γ_{m₁} · h_p W_{m₁})`, per head, heads
//! concatenated. Nodes whose only neighbor is themselves get `α = 1`.

mod graph;
mod layer;

pub use graph::{
    build_graph, cite_node_id, cpc_node_id, text_node_id, BuiltGraph, Edge, EdgeKind, GraphRecord,
    HeteroGraph, Modality, NodeInfo,
};
pub use layer::{
    gate_free_for_unit, layer_forward, layer_forward_tape, modal_attention, stack_forward,
    stack_forward_tape, GatLayerParams, GatLayerVars, GatOptions, LEAKY_SLOPE,
};
