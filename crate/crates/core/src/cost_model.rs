//! Analytic parameter, FLOP and activation-memory accounting.
//!
//! Conventions:
//! - one multiply-add is 2 FLOPs;
//! - convs carry no bias, norms carry a scale and a shift per channel;
//! - elementwise ops (activation, residual add) cost 1 FLOP per output element,
//!   a folded norm costs 2 (scale and shift);
//! - pooling costs one FLOP per window element, global pooling one per input
//!   element;
//! - SE costs its global pool, its two dense layers and one multiply per
//!   rescaled element.
//!
//! Activation memory sums every node's output and ignores fusion, padding and
//! rematerialisation, so it is a coarse estimate, not a device prediction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch_graph::{
    build_model, resolve_shapes, ArchError, FeatureShape, LayerKind, LayerNode, ModelGraph,
    ModelSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("bytes per element must be 2 or 4, got {0}")]
    BytesPerElement(u32),
    #[error("graph performs no floating point work; operational intensity is undefined")]
    ZeroFlops,
}

pub type Result<T> = std::result::Result<T, CostError>;

/// Bytes per element used for operational intensity (bfloat16).
pub const INTENSITY_BYTES_PER_ELEMENT: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub params: u64,
    pub flops: u64,
    pub activation_bytes_total: u64,
    pub activation_bytes_peak: u64,
    pub operational_intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationFootprint {
    pub total_bytes: u64,
    pub peak_bytes: u64,
}

/// Learnable parameters of a single node.
pub fn node_params(node: &LayerNode) -> u64 {
    let cin = u64::from(node.in_channels);
    let cout = u64::from(node.out_channels);
    let (kh, kw) = (u64::from(node.kernel.0), u64::from(node.kernel.1));
    match node.kind {
        LayerKind::Conv => kh * kw * cin * cout,
        LayerKind::DepthwiseConv => kh * kw * cout,
        LayerKind::Norm => 2 * cout,
        LayerKind::Dense => cin * cout + cout,
        LayerKind::Se => {
            let hidden = u64::from(node.se_hidden.unwrap_or(0));
            (cout * hidden + hidden) + (hidden * cout + cout)
        }
        LayerKind::AvgPool
        | LayerKind::MaxPool
        | LayerKind::Activation
        | LayerKind::ResidualAdd
        | LayerKind::GlobalAvgPool => 0,
    }
}

/// FLOPs of a single node given its input and output shapes.
pub fn node_flops(node: &LayerNode, input: FeatureShape, output: FeatureShape) -> u64 {
    let out_spatial = u64::from(output.height) * u64::from(output.width);
    let window = u64::from(node.kernel.0) * u64::from(node.kernel.1);
    let cin = u64::from(node.in_channels);
    let cout = u64::from(node.out_channels);
    match node.kind {
        LayerKind::Conv => 2 * out_spatial * cout * window * cin,
        LayerKind::DepthwiseConv => 2 * out_spatial * cout * window,
        LayerKind::Dense => 2 * cin * cout,
        LayerKind::Norm => 2 * output.elements(),
        LayerKind::Activation | LayerKind::ResidualAdd => output.elements(),
        LayerKind::AvgPool | LayerKind::MaxPool => output.elements() * window,
        LayerKind::GlobalAvgPool => input.elements(),
        LayerKind::Se => {
            let hidden = u64::from(node.se_hidden.unwrap_or(0));
            input.elements() + 2 * cout * hidden + 2 * hidden * cout + output.elements()
        }
    }
}

pub fn param_count(graph: &ModelGraph) -> u64 {
    graph.nodes.iter().map(node_params).sum()
}

fn input_shape(graph: &ModelGraph, shapes: &[FeatureShape], node: &LayerNode, resolution: u32) -> FeatureShape {
    match node.inputs.first() {
        Some(&p) => shapes[p],
        None => FeatureShape {
            height: resolution,
            width: resolution,
            channels: graph.input_channels,
        },
    }
}

/// Per-image FLOPs at a square input resolution.
pub fn flop_count(graph: &ModelGraph, resolution: u32) -> Result<u64> {
    let shapes = resolve_shapes(graph, resolution)?;
    Ok(graph
        .nodes
        .iter()
        .zip(&shapes)
        .map(|(node, out)| node_flops(node, input_shape(graph, &shapes, node, resolution), *out))
        .sum())
}

/// Activation bytes for a batch: the sum of all node outputs, and the largest
/// single node allocation counted as its output plus its inputs.
pub fn activation_footprint(
    graph: &ModelGraph,
    resolution: u32,
    batch: u32,
    bytes_per_element: u32,
) -> Result<ActivationFootprint> {
    if batch == 0 {
        return Err(CostError::ZeroBatch);
    }
    if bytes_per_element != 2 && bytes_per_element != 4 {
        return Err(CostError::BytesPerElement(bytes_per_element));
    }
    let shapes = resolve_shapes(graph, resolution)?;
    let scale = u64::from(batch) * u64::from(bytes_per_element);
    let mut total = 0u64;
    let mut peak = 0u64;
    for (node, out) in graph.nodes.iter().zip(&shapes) {
        let out_elems = out.elements();
        let in_elems: u64 = if node.inputs.is_empty() {
            input_shape(graph, &shapes, node, resolution).elements()
        } else {
            node.inputs.iter().map(|&p| shapes[p].elements()).sum()
        };
        total += out_elems * scale;
        peak = peak.max((out_elems + in_elems) * scale);
    }
    Ok(ActivationFootprint {
        total_bytes: total,
        peak_bytes: peak,
    })
}

/// Single-image FLOPs per byte moved, where each node reads its inputs and
/// its weights and writes its output, all at 2 bytes per element.
pub fn operational_intensity(graph: &ModelGraph, resolution: u32) -> Result<f64> {
    let shapes = resolve_shapes(graph, resolution)?;
    let mut flops = 0u64;
    let mut elements = 0u64;
    for (node, out) in graph.nodes.iter().zip(&shapes) {
        let input = input_shape(graph, &shapes, node, resolution);
        flops += node_flops(node, input, *out);
        let reads: u64 = if node.inputs.is_empty() {
            input.elements()
        } else {
            node.inputs.iter().map(|&p| shapes[p].elements()).sum()
        };
        elements += reads + out.elements() + node_params(node);
    }
    if flops == 0 {
        return Err(CostError::ZeroFlops);
    }
    let bytes = elements * u64::from(INTENSITY_BYTES_PER_ELEMENT);
    Ok(flops as f64 / bytes as f64)
}

/// Builds `spec` and evaluates every cost at `spec.resolution`.
pub fn cost_report(spec: &ModelSpec, batch: u32, bytes_per_element: u32) -> Result<CostReport> {
    let graph = build_model(spec)?;
    graph_cost_report(&graph, spec.resolution, batch, bytes_per_element)
}

pub fn graph_cost_report(
    graph: &ModelGraph,
    resolution: u32,
    batch: u32,
    bytes_per_element: u32,
) -> Result<CostReport> {
    let footprint = activation_footprint(graph, resolution, batch, bytes_per_element)?;
    Ok(CostReport {
        params: param_count(graph),
        flops: flop_count(graph, resolution)?,
        activation_bytes_total: footprint.total_bytes,
        activation_bytes_peak: footprint.peak_bytes,
        operational_intensity: operational_intensity(graph, resolution)?,
    })
}
