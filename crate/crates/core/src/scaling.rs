//! Scaling grid, strategy recommendation and application, speed-accuracy
//! Pareto frontiers, speedup ratios and log-log power-law fits.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("scaling axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error("{dimension} {value} is not on the ladder {ladder}")]
    OffLadder {
        dimension: &'static str,
        value: String,
        ladder: String,
    },
    #[error("pareto frontier of an empty point set")]
    EmptyPoints,
    #[error("invalid pareto point `{id}`: {reason}")]
    InvalidPoint { id: String, reason: String },
    #[error("power-law fit needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("power-law sample {index} is not strictly positive: ({flops}, {error})")]
    NonPositiveSample { index: usize, flops: f64, error: f64 },
    #[error("power-law fit is singular: all samples share the same FLOPs")]
    DegenerateFit,
}

pub type Result<T> = std::result::Result<T, ScalingError>;

pub const PAPER_WIDTHS: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];
pub const PAPER_DEPTHS: [u32; 7] = [26, 50, 101, 200, 300, 350, 400];
pub const PAPER_RESOLUTIONS: [u32; 5] = [128, 160, 224, 320, 448];

/// Depth sequence realised by the ResNet-RS family.
pub const DEPTH_LADDER: [u32; 7] = [50, 101, 152, 200, 270, 350, 420];
pub const WIDTH_LADDER: [f64; 3] = [1.0, 1.5, 2.0];
pub const RESOLUTION_LADDER: [u32; 5] = [160, 192, 224, 256, 320];
pub const DEFAULT_RESOLUTION_CAP: u32 = 320;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleConfig {
    pub depth: u32,
    pub width_mult: f64,
    pub resolution: u32,
}

impl ScaleConfig {
    pub fn new(depth: u32, width_mult: f64, resolution: u32) -> Self {
        Self {
            depth,
            width_mult,
            resolution,
        }
    }
}

impl fmt::Display for ScaleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}@{}", self.depth, self.width_mult, self.resolution)
    }
}

fn dedup_by<T: Copy, K: PartialEq>(values: &[T], key: impl Fn(T) -> K) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    for &v in values {
        if !out.iter().any(|&o| key(o) == key(v)) {
            out.push(v);
        }
    }
    out
}

/// Cartesian product of the axes, depth-major, then width, then resolution.
/// Duplicate axis values are dropped, keeping first occurrence.
pub fn enumerate_grid(widths: &[f64], depths: &[u32], resolutions: &[u32]) -> Result<Vec<ScaleConfig>> {
    if widths.is_empty() {
        return Err(ScalingError::EmptyAxis("widths"));
    }
    if depths.is_empty() {
        return Err(ScalingError::EmptyAxis("depths"));
    }
    if resolutions.is_empty() {
        return Err(ScalingError::EmptyAxis("resolutions"));
    }
    let widths = dedup_by(widths, f64::to_bits);
    let depths = dedup_by(depths, |d| d);
    let resolutions = dedup_by(resolutions, |r| r);

    let mut grid = Vec::with_capacity(widths.len() * depths.len() * resolutions.len());
    for &depth in &depths {
        for &width_mult in &widths {
            for &resolution in &resolutions {
                grid.push(ScaleConfig::new(depth, width_mult, resolution));
            }
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overfitting {
    Yes,
    No,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRegime {
    pub epochs: u32,
    pub dataset_images: Option<u64>,
    pub overfitting_expected: Overfitting,
}

impl TrainingRegime {
    pub fn epochs(epochs: u32) -> Self {
        Self {
            epochs,
            dataset_images: None,
            overfitting_expected: Overfitting::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    DepthSlowResolution,
    WidthSlowResolution,
    /// No clear winner between depth and width; only slow resolution scaling
    /// is recommended.
    RegimeDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingStrategy {
    pub kind: StrategyKind,
    pub resolution_cap: u32,
}

impl ScalingStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            resolution_cap: DEFAULT_RESOLUTION_CAP,
        }
    }

    pub fn advisory(&self) -> Option<&'static str> {
        match self.kind {
            StrategyKind::RegimeDependent => Some(
                "depth vs width preference varies with resolution in this regime; \
                 train a small set of both and compare on the target hardware",
            ),
            _ => None,
        }
    }
}

/// Epochs at or above which depth scaling is preferred.
pub const LONG_REGIME_EPOCHS: u32 = 350;
/// Epochs at or below which width scaling is preferred.
pub const SHORT_REGIME_EPOCHS: u32 = 10;

pub fn recommend_strategy(regime: &TrainingRegime) -> ScalingStrategy {
    let kind = match regime.overfitting_expected {
        Overfitting::Yes => StrategyKind::DepthSlowResolution,
        _ if regime.epochs >= LONG_REGIME_EPOCHS => StrategyKind::DepthSlowResolution,
        _ if regime.epochs <= SHORT_REGIME_EPOCHS => StrategyKind::WidthSlowResolution,
        Overfitting::No => StrategyKind::WidthSlowResolution,
        Overfitting::Unknown => StrategyKind::RegimeDependent,
    };
    ScalingStrategy::new(kind)
}

fn next_resolution(current: u32, cap: u32) -> u32 {
    RESOLUTION_LADDER
        .iter()
        .copied()
        .find(|&r| r > current && r <= cap)
        .unwrap_or(current)
}

fn ladder_string<T: fmt::Display>(ladder: &[T]) -> String {
    let items: Vec<String> = ladder.iter().map(T::to_string).collect();
    format!("[{}]", items.join(", "))
}

/// Walks the ladder of the strategy's scaling dimension from `base`, raising
/// the resolution by one ladder notch per step and never above the cap.
/// The output starts with `base` and stops early when the ladder runs out.
/// `RegimeDependent` only scales resolution.
pub fn apply_strategy(base: ScaleConfig, strategy: ScalingStrategy, steps: usize) -> Result<Vec<ScaleConfig>> {
    let mut out = vec![base];
    let mut current = base;
    match strategy.kind {
        StrategyKind::DepthSlowResolution => {
            let start = DEPTH_LADDER
                .iter()
                .position(|&d| d == base.depth)
                .ok_or_else(|| ScalingError::OffLadder {
                    dimension: "depth",
                    value: base.depth.to_string(),
                    ladder: ladder_string(&DEPTH_LADDER),
                })?;
            for &depth in DEPTH_LADDER.iter().skip(start + 1).take(steps) {
                current.depth = depth;
                current.resolution = next_resolution(current.resolution, strategy.resolution_cap);
                out.push(current);
            }
        }
        StrategyKind::WidthSlowResolution => {
            let start = WIDTH_LADDER
                .iter()
                .position(|&w| w == base.width_mult)
                .ok_or_else(|| ScalingError::OffLadder {
                    dimension: "width_mult",
                    value: base.width_mult.to_string(),
                    ladder: ladder_string(&WIDTH_LADDER),
                })?;
            for &width in WIDTH_LADDER.iter().skip(start + 1).take(steps) {
                current.width_mult = width;
                current.resolution = next_resolution(current.resolution, strategy.resolution_cap);
                out.push(current);
            }
        }
        StrategyKind::RegimeDependent => {
            for _ in 0..steps {
                let next = next_resolution(current.resolution, strategy.resolution_cap);
                if next == current.resolution {
                    break;
                }
                current.resolution = next;
                out.push(current);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub model_id: String,
    pub cost: f64,
    pub quality: f64,
}

impl ParetoPoint {
    pub fn new(model_id: impl Into<String>, cost: f64, quality: f64) -> Result<Self> {
        let point = Self {
            model_id: model_id.into(),
            cost,
            quality,
        };
        point.validate()?;
        Ok(point)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| ScalingError::InvalidPoint {
            id: self.model_id.clone(),
            reason: reason.to_string(),
        };
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(invalid("cost must be positive and finite"));
        }
        if !self.quality.is_finite() {
            return Err(invalid("quality must be finite"));
        }
        Ok(())
    }

    /// `self` is at least as cheap and at least as good, and strictly better
    /// in one of the two.
    pub fn dominates(&self, other: &ParetoPoint) -> bool {
        self.cost <= other.cost
            && self.quality >= other.quality
            && (self.cost < other.cost || self.quality > other.quality)
    }
}

/// Non-dominated points sorted by ascending cost. Among identical
/// (cost, quality) pairs only the first in input order is kept.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Result<Vec<ParetoPoint>> {
    if points.is_empty() {
        return Err(ScalingError::EmptyPoints);
    }
    for p in points {
        p.validate()?;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pa.cost
            .total_cmp(&pb.cost)
            .then(pb.quality.total_cmp(&pa.quality))
            .then(a.cmp(&b))
    });
    let mut frontier: Vec<ParetoPoint> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for i in order {
        if points[i].quality > best {
            best = points[i].quality;
            frontier.push(points[i].clone());
        }
    }
    Ok(frontier)
}

/// How many times faster `fast` is than `slow`.
pub fn speedup(slow: &ParetoPoint, fast: &ParetoPoint) -> f64 {
    slow.cost / fast.cost
}

/// `error = coefficient * flops^exponent`, fitted on log10 axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub r_squared: f64,
}

impl PowerLawFit {
    pub fn predict(&self, flops: f64) -> f64 {
        self.coefficient * flops.powf(self.exponent)
    }
}

/// Top-1 error in percent.
pub fn top1_error(top1: f64) -> f64 {
    100.0 - top1
}

/// Ordinary least squares of log10(error) on log10(flops).
pub fn powerlaw_fit(samples: &[(f64, f64)]) -> Result<PowerLawFit> {
    if samples.len() < 2 {
        return Err(ScalingError::TooFewSamples(samples.len()));
    }
    let mut logs = Vec::with_capacity(samples.len());
    for (index, &(flops, error)) in samples.iter().enumerate() {
        if !(flops > 0.0 && error > 0.0 && flops.is_finite() && error.is_finite()) {
            return Err(ScalingError::NonPositiveSample { index, flops, error });
        }
        logs.push((flops.log10(), error.log10()));
    }
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ScalingError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    // A constant response is fitted exactly by a flat line.
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerLawFit {
        exponent: slope,
        coefficient: 10f64.powf(intercept),
        r_squared,
    })
}
