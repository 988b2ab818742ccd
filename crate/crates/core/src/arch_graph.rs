//! ResNet / ResNet-D / SE-ResNet computation graphs as plain data.
//!
//! A [`ModelGraph`] is a topologically ordered list of [`LayerNode`]s. Each
//! node names its predecessors by index, so residual blocks are expressed as
//! two paths (main and skip) joined by a `ResidualAdd` node. Spatial sizes are
//! not stored on the graph; they are resolved for a given input resolution by
//! [`resolve_shapes`] and summarised per stage by [`shape_trace`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Depths with a known block allocation.
pub const SUPPORTED_DEPTHS: [u32; 10] = [26, 50, 101, 152, 200, 270, 300, 350, 400, 420];

/// Number of classes of the dense classifier head.
pub const NUM_CLASSES: u32 = 1000;

/// Smallest input resolution accepted by a [`ModelSpec`].
pub const MIN_RESOLUTION: u32 = 32;

/// Nominal bottleneck widths of c2..c5 at width multiplier 1.0.
const STAGE_FILTERS: [u32; 4] = [64, 128, 256, 512];
const BOTTLENECK_EXPANSION: u32 = 4;
const RESNET_D_STEM: [u32; 3] = [32, 32, 64];
const BASELINE_STEM: u32 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArchError {
    #[error("unknown layout for depth {depth}; supported depths are {SUPPORTED_DEPTHS:?} (supply a layout override for other depths)")]
    UnknownLayout { depth: u32 },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("width multiplier {width_mult} rounds the {nominal}-channel layer to zero channels")]
    ZeroChannels { width_mult: f64, nominal: u32 },
    #[error("resolution {resolution} collapses to a zero-sized feature map at node {node}")]
    DegenerateSpatial { resolution: u32, node: usize },
    #[error("malformed graph at node {node}: {reason}")]
    MalformedGraph { node: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, ArchError>;

/// Residual block counts for stages c2, c3, c4 and c5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StageLayout {
    pub blocks_per_stage: [u32; 4],
}

impl StageLayout {
    pub fn new(blocks_per_stage: [u32; 4]) -> Result<Self> {
        if blocks_per_stage.contains(&0) {
            return Err(ArchError::InvalidSpec(format!(
                "every stage needs at least one block, got {blocks_per_stage:?}"
            )));
        }
        Ok(Self { blocks_per_stage })
    }

    pub fn total_blocks(&self) -> u32 {
        self.blocks_per_stage.iter().sum()
    }

    /// Layer count implied by the layout: three convs per bottleneck, plus
    /// the stem conv and the classifier.
    pub fn nominal_depth(&self) -> u32 {
        3 * self.total_blocks() + 2
    }
}

impl fmt::Display for StageLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.blocks_per_stage;
        write!(f, "[{a}-{b}-{c}-{d}]")
    }
}

/// Block allocation for one of the [`SUPPORTED_DEPTHS`].
pub fn block_layout(depth: u32) -> Result<StageLayout> {
    let blocks = match depth {
        26 => [2, 2, 2, 2],
        50 => [3, 4, 6, 3],
        101 => [3, 4, 23, 3],
        152 => [3, 8, 36, 3],
        200 => [3, 24, 36, 3],
        270 => [4, 29, 53, 4],
        300 => [4, 36, 54, 4],
        350 => [4, 36, 72, 4],
        400 => [6, 48, 72, 6],
        420 => [4, 44, 87, 4],
        _ => return Err(ArchError::UnknownLayout { depth }),
    };
    Ok(StageLayout { blocks_per_stage: blocks })
}

/// Declarative description of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub depth: u32,
    pub width_mult: f64,
    pub resolution: u32,
    pub resnet_d: bool,
    pub se_ratio: f64,
    pub layout_override: Option<StageLayout>,
}

impl ModelSpec {
    /// Plain ResNet: 7x7 stem, max-pool, no SE.
    pub fn resnet(depth: u32, resolution: u32) -> Self {
        Self {
            depth,
            width_mult: 1.0,
            resolution,
            resnet_d: false,
            se_ratio: 0.0,
            layout_override: None,
        }
    }

    /// ResNet-RS: ResNet-D with squeeze-and-excitation at ratio 0.25.
    pub fn resnet_rs(depth: u32, resolution: u32) -> Self {
        Self {
            resnet_d: true,
            se_ratio: 0.25,
            ..Self::resnet(depth, resolution)
        }
    }

    pub fn with_width(mut self, width_mult: f64) -> Self {
        self.width_mult = width_mult;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(ArchError::InvalidSpec(format!(
                "resolution must be at least {MIN_RESOLUTION}, got {}",
                self.resolution
            )));
        }
        if !(self.width_mult.is_finite() && self.width_mult > 0.0) {
            return Err(ArchError::InvalidSpec(format!(
                "width_mult must be positive, got {}",
                self.width_mult
            )));
        }
        if !(0.0..=1.0).contains(&self.se_ratio) {
            return Err(ArchError::InvalidSpec(format!(
                "se_ratio must lie in [0, 1], got {}",
                self.se_ratio
            )));
        }
        match &self.layout_override {
            Some(layout) => StageLayout::new(layout.blocks_per_stage).map(|_| ()),
            None => block_layout(self.depth).map(|_| ()),
        }
    }

    pub fn layout(&self) -> Result<StageLayout> {
        match self.layout_override {
            Some(layout) => StageLayout::new(layout.blocks_per_stage),
            None => block_layout(self.depth),
        }
    }

    /// Rounded channel count for a nominal (width 1.0) channel count.
    pub fn channels(&self, nominal: u32) -> Result<u32> {
        scale_channels(nominal, self.width_mult)
    }
}

/// Round-half-up scaling of a nominal channel count.
pub fn scale_channels(nominal: u32, width_mult: f64) -> Result<u32> {
    let scaled = (f64::from(nominal) * width_mult + 0.5).floor();
    if scaled < 1.0 {
        return Err(ArchError::ZeroChannels { width_mult, nominal });
    }
    Ok(scaled as u32)
}

/// Hidden width of a squeeze-and-excitation bottleneck.
pub fn se_hidden_width(block_out_channels: u32, se_ratio: f64) -> u32 {
    let hidden = (se_ratio * f64::from(block_out_channels)).ceil();
    (hidden as u32).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    DepthwiseConv,
    AvgPool,
    MaxPool,
    Norm,
    Activation,
    Se,
    ResidualAdd,
    GlobalAvgPool,
    Dense,
}

impl LayerKind {
    /// Whether the node has a spatial window (kernel and stride apply).
    pub fn is_spatial(self) -> bool {
        matches!(
            self,
            LayerKind::Conv | LayerKind::DepthwiseConv | LayerKind::AvgPool | LayerKind::MaxPool
        )
    }
}

/// Where a node sits in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stem,
    C2,
    C3,
    C4,
    C5,
    Head,
}

impl Stage {
    pub const RESIDUAL: [Stage; 4] = [Stage::C2, Stage::C3, Stage::C4, Stage::C5];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    Main,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNode {
    pub kind: LayerKind,
    pub kernel: (u32, u32),
    pub stride: (u32, u32),
    pub in_channels: u32,
    pub out_channels: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_hidden: Option<u32>,
    pub stage: Stage,
    /// Global residual block index, 1-based. `None` outside residual blocks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<u32>,
    pub path: Path,
    /// Node belongs to a residual branch that stochastic depth may drop.
    pub residual_eligible: bool,
    /// Predecessor node indices; empty means the graph input.
    pub inputs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    pub nodes: Vec<LayerNode>,
    pub spec: Option<ModelSpec>,
    pub input_channels: u32,
}

impl ModelGraph {
    pub fn count(&self, kind: LayerKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Number of distinct residual blocks.
    pub fn block_count(&self) -> u32 {
        self.nodes.iter().filter_map(|n| n.block).max().unwrap_or(0)
    }

    /// Blocks containing at least one residual-eligible node.
    pub fn residual_eligible_blocks(&self) -> u32 {
        let mut blocks: Vec<u32> = self
            .nodes
            .iter()
            .filter(|n| n.residual_eligible)
            .filter_map(|n| n.block)
            .collect();
        blocks.dedup();
        blocks.len() as u32
    }

    /// Total output channels over all conv and depthwise conv nodes.
    pub fn total_conv_filters(&self) -> u64 {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, LayerKind::Conv | LayerKind::DepthwiseConv))
            .map(|n| u64::from(n.out_channels))
            .sum()
    }

    /// Checks ordering, channel continuity and per-kind node constraints.
    pub fn validate(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            let bad = |reason: String| ArchError::MalformedGraph { node: i, reason };
            if node.out_channels == 0 || node.in_channels == 0 {
                return Err(bad("channel count of zero".into()));
            }
            for &s in [node.stride.0, node.stride.1].iter() {
                if s != 1 && s != 2 {
                    return Err(bad(format!("stride {s} not in {{1, 2}}")));
                }
            }
            if node.kind.is_spatial() && (node.kernel.0 == 0 || node.kernel.1 == 0) {
                return Err(bad("zero-sized kernel".into()));
            }
            if node.inputs.iter().any(|&p| p >= i) {
                return Err(bad("predecessor is not earlier in topological order".into()));
            }
            let expected_inputs = if node.kind == LayerKind::ResidualAdd { 2 } else { 1 };
            if !node.inputs.is_empty() && node.inputs.len() != expected_inputs {
                return Err(bad(format!(
                    "expected {expected_inputs} inputs, got {}",
                    node.inputs.len()
                )));
            }
            if node.inputs.is_empty() && node.in_channels != self.input_channels {
                return Err(bad(format!(
                    "reads the graph input ({} channels) but declares {}",
                    self.input_channels, node.in_channels
                )));
            }
            for &p in &node.inputs {
                if self.nodes[p].out_channels != node.in_channels {
                    return Err(bad(format!(
                        "in_channels {} does not match predecessor {p} with {} out_channels",
                        node.in_channels, self.nodes[p].out_channels
                    )));
                }
            }
            let channel_preserving = matches!(
                node.kind,
                LayerKind::DepthwiseConv
                    | LayerKind::AvgPool
                    | LayerKind::MaxPool
                    | LayerKind::Norm
                    | LayerKind::Activation
                    | LayerKind::Se
                    | LayerKind::ResidualAdd
                    | LayerKind::GlobalAvgPool
            );
            if channel_preserving && node.in_channels != node.out_channels {
                return Err(bad(format!("{:?} must preserve channels", node.kind)));
            }
            if node.kind == LayerKind::Se && node.se_hidden.unwrap_or(0) == 0 {
                return Err(bad("SE node without a hidden width".into()));
            }
        }
        Ok(())
    }

    /// Classifier head: exactly one global pool, immediately consumed by the
    /// single dense node, which is the last node of the graph.
    pub fn validate_classifier_head(&self) -> Result<()> {
        let pools: Vec<usize> = self.indices_of(LayerKind::GlobalAvgPool);
        let dense: Vec<usize> = self.indices_of(LayerKind::Dense);
        let last = self.nodes.len().saturating_sub(1);
        match (pools.as_slice(), dense.as_slice()) {
            ([pool], [fc]) if *fc == last && self.nodes[*fc].inputs == vec![*pool] => Ok(()),
            _ => Err(ArchError::MalformedGraph {
                node: last,
                reason: format!(
                    "expected one global pool feeding one final dense node, found {} pools and {} dense",
                    pools.len(),
                    dense.len()
                ),
            }),
        }
    }

    fn indices_of(&self, kind: LayerKind) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Incremental graph construction. Each `push_*` returns the new node index.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    nodes: Vec<LayerNode>,
    input_channels: u32,
    stage: Stage,
    block: Option<u32>,
    path: Path,
}

impl GraphBuilder {
    pub fn new(input_channels: u32) -> Self {
        Self {
            nodes: Vec::new(),
            input_channels,
            stage: Stage::Stem,
            block: None,
            path: Path::Main,
        }
    }

    pub fn set_stage(&mut self, stage: Stage) {
        self.stage = stage;
    }

    pub fn set_block(&mut self, block: Option<u32>) {
        self.block = block;
    }

    pub fn set_path(&mut self, path: Path) {
        self.path = path;
    }

    /// Output channels of `from`, or the graph input channels for `None`.
    pub fn channels_of(&self, from: Option<usize>) -> u32 {
        from.map_or(self.input_channels, |i| self.nodes[i].out_channels)
    }

    fn push(
        &mut self,
        kind: LayerKind,
        inputs: &[usize],
        in_channels: u32,
        out_channels: u32,
        kernel: u32,
        stride: u32,
    ) -> usize {
        let residual_eligible = self.block.is_some() && self.path == Path::Main;
        self.nodes.push(LayerNode {
            kind,
            kernel: (kernel, kernel),
            stride: (stride, stride),
            in_channels,
            out_channels,
            se_hidden: None,
            stage: self.stage,
            block: self.block,
            path: self.path,
            residual_eligible,
            inputs: inputs.to_vec(),
        });
        self.nodes.len() - 1
    }

    fn single(&mut self, from: Option<usize>) -> (Vec<usize>, u32) {
        (from.into_iter().collect(), self.channels_of(from))
    }

    pub fn conv(&mut self, from: Option<usize>, out: u32, kernel: u32, stride: u32) -> usize {
        let (inputs, c) = self.single(from);
        self.push(LayerKind::Conv, &inputs, c, out, kernel, stride)
    }

    pub fn depthwise_conv(&mut self, from: Option<usize>, kernel: u32, stride: u32) -> usize {
        let (inputs, c) = self.single(from);
        self.push(LayerKind::DepthwiseConv, &inputs, c, c, kernel, stride)
    }

    pub fn avg_pool(&mut self, from: Option<usize>, kernel: u32, stride: u32) -> usize {
        let (inputs, c) = self.single(from);
        self.push(LayerKind::AvgPool, &inputs, c, c, kernel, stride)
    }

    pub fn max_pool(&mut self, from: Option<usize>, kernel: u32, stride: u32) -> usize {
        let (inputs, c) = self.single(from);
        self.push(LayerKind::MaxPool, &inputs, c, c, kernel, stride)
    }

    pub fn norm(&mut self, from: Option<usize>) -> usize {
        let (inputs, c) = self.single(from);
        self.push(LayerKind::Norm, &inputs, c, c, 1, 1)
    }

    pub fn relu(&mut self, from: Option<usize>) -> usize {
        let (inputs, c) = self.single(from);
        self.push(LayerKind::Activation, &inputs, c, c, 1, 1)
    }

    pub fn se(&mut self, from: usize, hidden: u32) -> usize {
        let c = self.nodes[from].out_channels;
        let idx = self.push(LayerKind::Se, &[from], c, c, 1, 1);
        self.nodes[idx].se_hidden = Some(hidden);
        idx
    }

    pub fn residual_add(&mut self, main: usize, skip: usize) -> usize {
        let c = self.nodes[main].out_channels;
        self.push(LayerKind::ResidualAdd, &[main, skip], c, c, 1, 1)
    }

    pub fn global_avg_pool(&mut self, from: usize) -> usize {
        let c = self.nodes[from].out_channels;
        self.push(LayerKind::GlobalAvgPool, &[from], c, c, 1, 1)
    }

    pub fn dense(&mut self, from: usize, out: u32) -> usize {
        let c = self.nodes[from].out_channels;
        self.push(LayerKind::Dense, &[from], c, out, 1, 1)
    }

    /// conv, norm and (optionally) relu.
    pub fn conv_bn(
        &mut self,
        from: Option<usize>,
        out: u32,
        kernel: u32,
        stride: u32,
        relu: bool,
    ) -> usize {
        let c = self.conv(from, out, kernel, stride);
        let n = self.norm(Some(c));
        if relu {
            self.relu(Some(n))
        } else {
            n
        }
    }

    pub fn finish(self, spec: Option<ModelSpec>) -> Result<ModelGraph> {
        let graph = ModelGraph {
            nodes: self.nodes,
            spec,
            input_channels: self.input_channels,
        };
        graph.validate()?;
        Ok(graph)
    }
}

/// Builds the full classifier graph described by `spec`.
pub fn build_model(spec: &ModelSpec) -> Result<ModelGraph> {
    spec.validate()?;
    let layout = spec.layout()?;
    let mut g = GraphBuilder::new(3);

    let mut x = if spec.resnet_d {
        let [a, b, c] = RESNET_D_STEM;
        let s1 = g.conv_bn(None, spec.channels(a)?, 3, 2, true);
        let s2 = g.conv_bn(Some(s1), spec.channels(b)?, 3, 1, true);
        g.conv_bn(Some(s2), spec.channels(c)?, 3, 1, true)
    } else {
        let s = g.conv_bn(None, spec.channels(BASELINE_STEM)?, 7, 2, true);
        g.max_pool(Some(s), 3, 2)
    };

    let mut block_id = 0;
    for (stage_idx, (&stage, &blocks)) in Stage::RESIDUAL
        .iter()
        .zip(layout.blocks_per_stage.iter())
        .enumerate()
    {
        g.set_stage(stage);
        let filters = spec.channels(STAGE_FILTERS[stage_idx])?;
        let out = spec.channels(STAGE_FILTERS[stage_idx] * BOTTLENECK_EXPANSION)?;
        for j in 0..blocks {
            block_id += 1;
            g.set_block(Some(block_id));
            // With the max-pool removed, c2 downsamples in its first block.
            let stride = if j == 0 && (stage_idx > 0 || spec.resnet_d) { 2 } else { 1 };
            x = bottleneck(&mut g, spec, x, filters, out, stride);
        }
    }

    g.set_block(None);
    g.set_path(Path::Main);
    g.set_stage(Stage::Head);
    let pool = g.global_avg_pool(x);
    g.dense(pool, NUM_CLASSES);

    let graph = g.finish(Some(spec.clone()))?;
    graph.validate_classifier_head()?;
    Ok(graph)
}

fn bottleneck(
    g: &mut GraphBuilder,
    spec: &ModelSpec,
    input: usize,
    filters: u32,
    out: u32,
    stride: u32,
) -> usize {
    // ResNet-D moves the stride from the first 1x1 onto the 3x3.
    let (stride_1x1, stride_3x3) = if spec.resnet_d { (1, stride) } else { (stride, 1) };

    g.set_path(Path::Main);
    let a = g.conv_bn(Some(input), filters, 1, stride_1x1, true);
    let b = g.conv_bn(Some(a), filters, 3, stride_3x3, true);
    let mut main = g.conv_bn(Some(b), out, 1, 1, false);
    if spec.se_ratio > 0.0 {
        main = g.se(main, se_hidden_width(out, spec.se_ratio));
    }

    g.set_path(Path::Skip);
    let in_channels = g.channels_of(Some(input));
    let skip = if stride == 1 && in_channels == out {
        input
    } else if spec.resnet_d && stride == 2 {
        let pooled = g.avg_pool(Some(input), 2, 2);
        g.conv_bn(Some(pooled), out, 1, 1, false)
    } else {
        g.conv_bn(Some(input), out, 1, stride, false)
    };

    g.set_path(Path::Main);
    let sum = g.residual_add(main, skip);
    // The closing ReLU is outside the droppable branch.
    let block = g.block;
    g.set_block(None);
    let y = g.relu(Some(sum));
    g.nodes[y].block = block;
    g.set_block(block);
    y
}

/// Output shape of one node: height, width, channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureShape {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
}

impl FeatureShape {
    pub fn elements(&self) -> u64 {
        u64::from(self.height) * u64::from(self.width) * u64::from(self.channels)
    }
}

/// Output shape of every node at an input resolution (square input).
/// Strided windows use floor division; a zero-sized map is an error.
pub fn resolve_shapes(graph: &ModelGraph, resolution: u32) -> Result<Vec<FeatureShape>> {
    let input = FeatureShape {
        height: resolution,
        width: resolution,
        channels: graph.input_channels,
    };
    let mut shapes: Vec<FeatureShape> = Vec::with_capacity(graph.nodes.len());
    for (i, node) in graph.nodes.iter().enumerate() {
        let src = node.inputs.first().map_or(input, |&p| shapes[p]);
        if src.height == 0 || src.width == 0 {
            return Err(ArchError::DegenerateSpatial { resolution, node: i });
        }
        let shape = match node.kind {
            LayerKind::GlobalAvgPool | LayerKind::Dense => FeatureShape {
                height: 1,
                width: 1,
                channels: node.out_channels,
            },
            _ => FeatureShape {
                height: src.height / node.stride.0,
                width: src.width / node.stride.1,
                channels: node.out_channels,
            },
        };
        if shape.height == 0 || shape.width == 0 {
            return Err(ArchError::DegenerateSpatial { resolution, node: i });
        }
        if node.kind == LayerKind::ResidualAdd {
            let other = shapes[node.inputs[1]];
            if (other.height, other.width) != (shape.height, shape.width) {
                return Err(ArchError::MalformedGraph {
                    node: i,
                    reason: format!(
                        "residual paths disagree at resolution {resolution}: {}x{} vs {}x{}",
                        shape.height, shape.width, other.height, other.width
                    ),
                });
            }
        }
        shapes.push(shape);
    }
    Ok(shapes)
}

/// Feature map shape after the stem and at the end of each residual stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageShapes {
    pub stem: FeatureShape,
    pub c2: FeatureShape,
    pub c3: FeatureShape,
    pub c4: FeatureShape,
    pub c5: FeatureShape,
}

impl StageShapes {
    pub fn stages(&self) -> [FeatureShape; 4] {
        [self.c2, self.c3, self.c4, self.c5]
    }
}

pub fn shape_trace(graph: &ModelGraph, resolution: u32) -> Result<StageShapes> {
    if resolution < MIN_RESOLUTION {
        return Err(ArchError::InvalidSpec(format!(
            "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let shapes = resolve_shapes(graph, resolution)?;
    // The stem output is the last stem conv/activation, before any max-pool.
    let stem = graph
        .nodes
        .iter()
        .zip(&shapes)
        .rfind(|(n, _)| n.stage == Stage::Stem && n.kind != LayerKind::MaxPool)
        .map(|(_, s)| *s);
    let last_of = |stage: Stage| {
        graph
            .nodes
            .iter()
            .zip(&shapes)
            .rfind(|(n, _)| n.stage == stage)
            .map(|(_, s)| *s)
    };
    let missing = |what: &str| ArchError::MalformedGraph {
        node: 0,
        reason: format!("graph has no {what} nodes"),
    };
    Ok(StageShapes {
        stem: stem.ok_or_else(|| missing("stem"))?,
        c2: last_of(Stage::C2).ok_or_else(|| missing("c2"))?,
        c3: last_of(Stage::C3).ok_or_else(|| missing("c3"))?,
        c4: last_of(Stage::C4).ok_or_else(|| missing("c4"))?,
        c5: last_of(Stage::C5).ok_or_else(|| missing("c5"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_from_tables() {
        assert_eq!(block_layout(50).unwrap().blocks_per_stage, [3, 4, 6, 3]);
        assert_eq!(block_layout(350).unwrap().blocks_per_stage, [4, 36, 72, 4]);
        assert_eq!(block_layout(300).unwrap().blocks_per_stage, [4, 36, 54, 4]);
        assert_eq!(block_layout(400).unwrap().blocks_per_stage, [6, 48, 72, 6]);
        assert_eq!(block_layout(26).unwrap().blocks_per_stage, [2, 2, 2, 2]);
    }

    #[test]
    fn depth_26_is_the_only_equal_allocation() {
        let equal: Vec<u32> = (1..20).filter(|b| 3 * 4 * b + 2 == 26).collect();
        assert_eq!(equal, vec![2]);
    }

    #[test]
    fn unknown_depth_names_supported_set() {
        let err = block_layout(77).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("77"));
        assert!(msg.contains("420") && msg.contains("26"));
    }

    #[test]
    fn layout_override_allows_custom_depth() {
        let mut spec = ModelSpec::resnet_rs(38, 224);
        assert!(build_model(&spec).is_err());
        spec.layout_override = Some(StageLayout::new([3, 3, 3, 3]).unwrap());
        let g = build_model(&spec).unwrap();
        assert_eq!(g.block_count(), 12);
    }

    #[test]
    fn se_hidden_rounding() {
        assert_eq!(se_hidden_width(2048, 0.25), 512);
        assert_eq!(se_hidden_width(256, 0.25), 64);
        assert_eq!(se_hidden_width(30, 0.25), 8);
        assert_eq!(se_hidden_width(1, 0.01), 1);
    }

    #[test]
    fn width_rounding_half_up() {
        assert_eq!(scale_channels(64, 0.25).unwrap(), 16);
        assert_eq!(scale_channels(32, 1.5).unwrap(), 48);
        // 3 * 0.5 = 1.5 rounds up to 2.
        assert_eq!(scale_channels(3, 0.5).unwrap(), 2);
        assert!(matches!(
            scale_channels(32, 0.01),
            Err(ArchError::ZeroChannels { .. })
        ));
    }

    #[test]
    fn tiny_width_is_rejected() {
        let spec = ModelSpec::resnet_rs(50, 224).with_width(0.01);
        assert!(matches!(build_model(&spec), Err(ArchError::ZeroChannels { .. })));
    }

    #[test]
    fn baseline_resnet50_structure() {
        let g = build_model(&ModelSpec::resnet(50, 224)).unwrap();
        let stem = &g.nodes[0];
        assert_eq!((stem.kind, stem.kernel, stem.stride), (LayerKind::Conv, (7, 7), (2, 2)));
        assert_eq!(g.count(LayerKind::MaxPool), 1);
        assert_eq!(g.count(LayerKind::AvgPool), 0);
        assert_eq!(g.count(LayerKind::Se), 0);
        assert_eq!(g.block_count(), 16);
    }

    #[test]
    fn resnet_rs50_structure() {
        let g = build_model(&ModelSpec::resnet_rs(50, 224)).unwrap();
        let stem: Vec<&LayerNode> = g
            .nodes
            .iter()
            .filter(|n| n.stage == Stage::Stem && n.kind == LayerKind::Conv)
            .collect();
        assert_eq!(stem.len(), 3);
        assert!(stem.iter().all(|n| n.kernel == (3, 3)));
        assert_eq!(stem[0].stride, (2, 2));
        assert_eq!(stem[1].stride, (1, 1));
        assert_eq!(
            stem.iter().map(|n| n.out_channels).collect::<Vec<_>>(),
            vec![32, 32, 64]
        );
        assert_eq!(g.count(LayerKind::MaxPool), 0);

        // First c2 block downsamples in its 3x3 conv.
        let first_block: Vec<&LayerNode> = g
            .nodes
            .iter()
            .filter(|n| n.block == Some(1) && n.kind == LayerKind::Conv && n.path == Path::Main)
            .collect();
        assert_eq!(first_block[0].stride, (1, 1));
        assert_eq!(first_block[1].kernel, (3, 3));
        assert_eq!(first_block[1].stride, (2, 2));

        // Four downsampling blocks, each skip path is avg-pool then 1x1 conv.
        let pools: Vec<usize> = g
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == LayerKind::AvgPool)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(pools.len(), 4);
        for p in pools {
            assert_eq!(g.nodes[p].path, Path::Skip);
            assert_eq!(g.nodes[p].kernel, (2, 2));
            let next = &g.nodes[p + 1];
            assert_eq!((next.kind, next.kernel, next.stride), (LayerKind::Conv, (1, 1), (1, 1)));
            assert_eq!(next.inputs, vec![p]);
        }
        assert_eq!(g.count(LayerKind::Se), 16);
    }

    #[test]
    fn resnet_rs101_residual_blocks() {
        let g = build_model(&ModelSpec::resnet_rs(101, 224)).unwrap();
        assert_eq!(g.residual_eligible_blocks(), 33);
    }

    #[test]
    fn shape_trace_matches_architecture_diagram() {
        let g = build_model(&ModelSpec::resnet_rs(101, 224)).unwrap();
        let t = shape_trace(&g, 224).unwrap();
        let hwc = |s: FeatureShape| (s.height, s.width, s.channels);
        assert_eq!(hwc(t.stem), (112, 112, 64));
        assert_eq!(hwc(t.c2), (56, 56, 256));
        assert_eq!(hwc(t.c3), (28, 28, 512));
        assert_eq!(hwc(t.c4), (14, 14, 1024));
        assert_eq!(hwc(t.c5), (7, 7, 2048));
    }

    #[test]
    fn shape_trace_small_inputs() {
        let g = build_model(&ModelSpec::resnet_rs(50, 160)).unwrap();
        assert_eq!(shape_trace(&g, 160).unwrap().c5.height, 5);
        assert_eq!(shape_trace(&g, 32).unwrap().c5.height, 1);
        assert!(shape_trace(&g, 16).is_err());
        assert!(matches!(
            resolve_shapes(&g, 16),
            Err(ArchError::DegenerateSpatial { resolution: 16, .. })
        ));
    }

    #[test]
    fn spec_validation() {
        let mut s = ModelSpec::resnet_rs(50, 31);
        assert!(s.validate().is_err());
        s.resolution = 224;
        s.se_ratio = 1.5;
        assert!(s.validate().is_err());
        s.se_ratio = 0.25;
        s.width_mult = 0.0;
        assert!(s.validate().is_err());
        s.width_mult = f64::NAN;
        assert!(s.validate().is_err());
    }

    #[test]
    fn continuity_violation_is_reported() {
        let mut g = build_model(&ModelSpec::resnet_rs(50, 224)).unwrap();
        g.nodes[4].in_channels += 1;
        assert!(matches!(g.validate(), Err(ArchError::MalformedGraph { node: 4, .. })));
    }
}
