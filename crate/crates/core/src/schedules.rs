//! Training-recipe components as deterministic functions: learning rate
//! schedules, EMA, label smoothing, stochastic depth, regularization policy
//! tables and named recipe presets.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scaling::ScaleConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("step {step} outside the schedule [0, {total_steps}]")]
    StepOutOfRange { step: u64, total_steps: u64 },
    #[error("invalid schedule plan: {0}")]
    InvalidPlan(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no hyperparameter row for depth {depth} at resolution {resolution}; valid pairs: {valid}")]
    UnknownModel {
        depth: u32,
        resolution: u32,
        valid: String,
    },
    #[error("unsupported width multiplier {0}; expected one of 0.25, 0.5, 1.0, 1.5, 2.0")]
    UnsupportedWidth(f64),
    #[error("unsupported epoch budget {0}; expected 10, 100 or 350")]
    UnsupportedEpochs(u32),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

pub const WEIGHT_DECAY: f64 = 4e-5;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-4;
pub const EMA_DECAY: f64 = 0.9999;
pub const LABEL_SMOOTHING: f64 = 0.1;
pub const RANDAUGMENT_LAYERS: u32 = 2;
pub const DEFAULT_WARMUP_EPOCHS: u32 = 5;
/// Epoch positions of the stepwise decay, each multiplying the rate by 0.1.
pub const STEPWISE_MILESTONE_EPOCHS: [u32; 3] = [30, 60, 80];
pub const STEPWISE_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    Cosine,
    /// Each milestone step multiplies the rate by its factor from that step on.
    Stepwise { milestones: Vec<u64>, factors: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub peak_lr: f64,
    pub decay: Decay,
}

impl SchedulePlan {
    pub fn cosine(total_steps: u64, warmup_steps: u64, peak_lr: f64) -> Result<Self> {
        let plan = Self {
            total_steps,
            warmup_steps,
            peak_lr,
            decay: Decay::Cosine,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Stepwise plan with the default milestones converted to steps.
    pub fn stepwise(total_steps: u64, warmup_steps: u64, peak_lr: f64, steps_per_epoch: u64) -> Result<Self> {
        let milestones: Vec<u64> = STEPWISE_MILESTONE_EPOCHS
            .iter()
            .map(|&e| u64::from(e) * steps_per_epoch)
            .filter(|&s| s > warmup_steps && s <= total_steps)
            .collect();
        let factors = vec![STEPWISE_FACTOR; milestones.len()];
        let plan = Self {
            total_steps,
            warmup_steps,
            peak_lr,
            decay: Decay::Stepwise { milestones, factors },
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup_steps >= self.total_steps {
            return Err(ScheduleError::InvalidPlan(format!(
                "warmup_steps ({}) must be below total_steps ({})",
                self.warmup_steps, self.total_steps
            )));
        }
        if !(self.peak_lr.is_finite() && self.peak_lr > 0.0) {
            return Err(ScheduleError::InvalidPlan(format!(
                "peak_lr must be positive, got {}",
                self.peak_lr
            )));
        }
        if let Decay::Stepwise { milestones, factors } = &self.decay {
            if milestones.len() != factors.len() {
                return Err(ScheduleError::InvalidPlan(
                    "stepwise milestones and factors differ in length".into(),
                ));
            }
            if milestones.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScheduleError::InvalidPlan(
                    "stepwise milestones must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

pub fn lr_at(step: u64, plan: &SchedulePlan) -> Result<f64> {
    if step > plan.total_steps {
        return Err(ScheduleError::StepOutOfRange {
            step,
            total_steps: plan.total_steps,
        });
    }
    if step < plan.warmup_steps {
        return Ok(plan.peak_lr * step as f64 / plan.warmup_steps as f64);
    }
    match &plan.decay {
        Decay::Cosine => {
            let progress =
                (step - plan.warmup_steps) as f64 / (plan.total_steps - plan.warmup_steps) as f64;
            Ok(plan.peak_lr * 0.5 * (1.0 + (PI * progress).cos()))
        }
        Decay::Stepwise { milestones, factors } => Ok(milestones
            .iter()
            .zip(factors)
            .filter(|(&m, _)| step >= m)
            .fold(plan.peak_lr, |lr, (_, &f)| lr * f)),
    }
}

/// How the peak learning rate is derived from the batch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakLrRule {
    /// `0.1 / B`, as printed in the hyperparameter table.
    Verbatim,
    /// `0.1 * B / 256`.
    LinearScaling,
}

impl PeakLrRule {
    pub fn peak_lr(self, batch: u32) -> Result<f64> {
        if batch == 0 {
            return Err(ScheduleError::InvalidArgument("batch size must be positive".into()));
        }
        let b = f64::from(batch);
        Ok(match self {
            PeakLrRule::Verbatim => 0.1 / b,
            PeakLrRule::LinearScaling => 0.1 * b / 256.0,
        })
    }
}

impl FromStr for PeakLrRule {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(PeakLrRule::Verbatim),
            "linear-scaling" => Ok(PeakLrRule::LinearScaling),
            other => Err(ScheduleError::InvalidArgument(format!(
                "unknown peak LR rule `{other}` (expected verbatim or linear-scaling)"
            ))),
        }
    }
}

pub fn ema_update(shadow: f64, current: f64, decay: f64) -> f64 {
    decay * shadow + (1.0 - decay) * current
}

/// Smoothed one-hot target: `(1 - eps) * onehot + eps / K`.
pub fn label_smooth(class_index: usize, num_classes: usize, epsilon: f64) -> Result<Vec<f64>> {
    if class_index >= num_classes {
        return Err(ScheduleError::InvalidArgument(format!(
            "class index {class_index} out of range for {num_classes} classes"
        )));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(ScheduleError::InvalidArgument(format!(
            "label smoothing epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let off = epsilon / num_classes as f64;
    let mut dist = vec![off; num_classes];
    dist[class_index] = 1.0 - epsilon + off;
    Ok(dist)
}

/// Survival probability of residual block `block_index` (1-based) under the
/// linear decay rule: the last block is dropped with `final_drop`.
pub fn stochastic_depth_survival(block_index: u32, total_blocks: u32, final_drop: f64) -> Result<f64> {
    if block_index == 0 || block_index > total_blocks {
        return Err(ScheduleError::InvalidArgument(format!(
            "block index {block_index} outside 1..={total_blocks}"
        )));
    }
    if !(0.0..=1.0).contains(&final_drop) {
        return Err(ScheduleError::InvalidArgument(format!(
            "drop rate must lie in [0, 1], got {final_drop}"
        )));
    }
    Ok(1.0 - f64::from(block_index) / f64::from(total_blocks) * final_drop)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegConfig {
    pub randaugment_layers: u32,
    pub randaugment_magnitude: u32,
    pub stochastic_depth_rate: f64,
    pub dropout_rate: f64,
    pub label_smoothing: f64,
    pub weight_decay: f64,
    pub ema_decay: f64,
    pub epochs: u32,
}

impl RegConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("stochastic_depth_rate", self.stochastic_depth_rate),
            ("dropout_rate", self.dropout_rate),
            ("label_smoothing", self.label_smoothing),
            ("weight_decay", self.weight_decay),
            ("ema_decay", self.ema_decay),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(ScheduleError::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.randaugment_magnitude > 30 {
            return Err(ScheduleError::InvalidArgument(format!(
                "RandAugment magnitude {} above 30",
                self.randaugment_magnitude
            )));
        }
        Ok(())
    }
}

/// (depth, resolution, magnitude, stochastic depth, dropout) per ResNet-RS model.
pub const RESNET_RS_HPARAMS: [(u32, u32, u32, f64, f64); 11] = [
    (50, 160, 10, 0.0, 0.25),
    (101, 160, 10, 0.0, 0.25),
    (101, 192, 15, 0.0, 0.25),
    (152, 192, 15, 0.0, 0.25),
    (152, 224, 15, 0.0, 0.25),
    (152, 256, 15, 0.0, 0.25),
    (200, 256, 15, 0.1, 0.25),
    (270, 256, 15, 0.1, 0.25),
    (350, 256, 15, 0.1, 0.25),
    (350, 320, 15, 0.1, 0.4),
    (420, 320, 15, 0.1, 0.4),
];

/// Regularization of one of the published ResNet-RS models.
pub fn reg_policy(depth: u32, resolution: u32) -> Result<RegConfig> {
    let row = RESNET_RS_HPARAMS
        .iter()
        .find(|r| r.0 == depth && r.1 == resolution)
        .ok_or_else(|| ScheduleError::UnknownModel {
            depth,
            resolution,
            valid: RESNET_RS_HPARAMS
                .iter()
                .map(|r| format!("{}@{}", r.0, r.1))
                .collect::<Vec<_>>()
                .join(", "),
        })?;
    Ok(RegConfig {
        randaugment_layers: RANDAUGMENT_LAYERS,
        randaugment_magnitude: row.2,
        stochastic_depth_rate: row.3,
        dropout_rate: row.4,
        label_smoothing: LABEL_SMOOTHING,
        weight_decay: WEIGHT_DECAY,
        ema_decay: EMA_DECAY,
        epochs: 350,
    })
}

/// Dropout on the classifier input per width multiplier.
pub const DROPOUT_BY_WIDTH: [(f64, f64); 5] = [(0.25, 0.0), (0.5, 0.1), (1.0, 0.25), (1.5, 0.6), (2.0, 0.75)];

pub fn dropout_for_width(width_mult: f64) -> Result<f64> {
    DROPOUT_BY_WIDTH
        .iter()
        .find(|(w, _)| *w == width_mult)
        .map(|(_, d)| *d)
        .ok_or(ScheduleError::UnsupportedWidth(width_mult))
}

/// RandAugment magnitude used for the scaling grid at 350 epochs.
pub fn grid_magnitude(width_mult: f64, resolution: u32) -> u32 {
    if width_mult == 0.25 || width_mult == 0.5 || (64..=160).contains(&resolution) {
        10
    } else if (224..=320).contains(&resolution) {
        15
    } else {
        20
    }
}

/// Regularization used for one cell of the scaling grid.
pub fn grid_reg_policy(config: &ScaleConfig, epochs: u32) -> Result<RegConfig> {
    let dropout = dropout_for_width(config.width_mult)?;
    match epochs {
        350 => {
            let sd = if config.resolution >= 224 && config.width_mult > 0.25 { 0.2 } else { 0.0 };
            Ok(RegConfig {
                randaugment_layers: RANDAUGMENT_LAYERS,
                randaugment_magnitude: grid_magnitude(config.width_mult, config.resolution),
                stochastic_depth_rate: sd,
                dropout_rate: dropout,
                label_smoothing: LABEL_SMOOTHING,
                weight_decay: WEIGHT_DECAY,
                ema_decay: EMA_DECAY,
                epochs,
            })
        }
        10 | 100 => Ok(RegConfig {
            randaugment_layers: 0,
            randaugment_magnitude: 0,
            stochastic_depth_rate: 0.0,
            dropout_rate: 0.0,
            label_smoothing: 0.0,
            weight_decay: WEIGHT_DECAY,
            ema_decay: EMA_DECAY,
            epochs,
        }),
        other => Err(ScheduleError::UnsupportedEpochs(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regularizer {
    #[serde(rename = "RA")]
    RandAugment,
    #[serde(rename = "LS")]
    LabelSmoothing,
    #[serde(rename = "DO")]
    Dropout,
    #[serde(rename = "SD")]
    StochasticDepth,
}

impl FromStr for Regularizer {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RA" => Ok(Regularizer::RandAugment),
            "LS" => Ok(Regularizer::LabelSmoothing),
            "DO" => Ok(Regularizer::Dropout),
            "SD" => Ok(Regularizer::StochasticDepth),
            _ => Err(ScheduleError::InvalidArgument(format!("unknown regularizer `{s}`"))),
        }
    }
}

/// Weight decay to pair with a set of regularizers: dropout or stochastic
/// depth call for the smaller value.
pub fn recommend_weight_decay(active: &[Regularizer]) -> f64 {
    if active
        .iter()
        .any(|r| matches!(r, Regularizer::Dropout | Regularizer::StochasticDepth))
    {
        WEIGHT_DECAY
    } else {
        DEFAULT_WEIGHT_DECAY
    }
}

/// RandAugment magnitude for EfficientNet-RS at a resolution.
pub fn enet_rs_magnitude(resolution: u32) -> u32 {
    if resolution <= 224 {
        10
    } else if resolution > 320 {
        20
    } else {
        15
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrDecayKind {
    Stepwise,
    Cosine,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Momentum,
    RmsProp,
}

/// Which recipe components are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecipeMethods {
    pub ema: bool,
    pub label_smoothing: bool,
    pub stochastic_depth: bool,
    pub randaugment: bool,
    pub dropout_fc: bool,
    pub smaller_weight_decay: bool,
    pub squeeze_excitation: bool,
    pub resnet_d: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipePreset {
    pub name: String,
    pub epochs: u32,
    pub lr_decay: LrDecayKind,
    pub optimizer: OptimizerKind,
    pub methods: RecipeMethods,
    /// Regularization values applied when the methods are on.
    pub reg: RegConfig,
    /// Reference top-1 accuracy for the ablation ladder entries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_top1: Option<f64>,
}

impl RecipePreset {
    fn new(name: &str, epochs: u32, lr_decay: LrDecayKind, optimizer: OptimizerKind, methods: RecipeMethods) -> Self {
        let mut preset = Self {
            name: name.to_string(),
            epochs,
            lr_decay,
            optimizer,
            methods,
            reg: RegConfig {
                randaugment_layers: 0,
                randaugment_magnitude: 0,
                stochastic_depth_rate: 0.0,
                dropout_rate: 0.0,
                label_smoothing: 0.0,
                weight_decay: DEFAULT_WEIGHT_DECAY,
                ema_decay: 0.0,
                epochs,
            },
            reported_top1: None,
        };
        preset.sync_reg();
        preset
    }

    // Reference values: the ResNet-200 @ 256 row of the hyperparameter table,
    // the model the additive study is run on.
    fn sync_reg(&mut self) {
        let full = reg_policy(200, 256).expect("reference row exists");
        let m = self.methods;
        self.reg = RegConfig {
            randaugment_layers: if m.randaugment { full.randaugment_layers } else { 0 },
            randaugment_magnitude: if m.randaugment { full.randaugment_magnitude } else { 0 },
            stochastic_depth_rate: if m.stochastic_depth { full.stochastic_depth_rate } else { 0.0 },
            dropout_rate: if m.dropout_fc { full.dropout_rate } else { 0.0 },
            label_smoothing: if m.label_smoothing { full.label_smoothing } else { 0.0 },
            weight_decay: if m.smaller_weight_decay { WEIGHT_DECAY } else { DEFAULT_WEIGHT_DECAY },
            ema_decay: if m.ema { EMA_DECAY } else { 0.0 },
            epochs: self.epochs,
        };
    }

    /// Schedule for this preset at the given batch size and epoch budget.
    pub fn schedule_plan(
        &self,
        rule: PeakLrRule,
        batch: u32,
        epochs: u32,
        steps_per_epoch: u64,
        warmup_epochs: u32,
    ) -> Result<SchedulePlan> {
        if epochs == 0 || steps_per_epoch == 0 {
            return Err(ScheduleError::InvalidArgument(
                "epochs and steps per epoch must be positive".into(),
            ));
        }
        let total = u64::from(epochs) * steps_per_epoch;
        let warmup = u64::from(warmup_epochs) * steps_per_epoch;
        let peak = rule.peak_lr(batch)?;
        match self.lr_decay {
            LrDecayKind::Stepwise => SchedulePlan::stepwise(total, warmup, peak, steps_per_epoch),
            // Exponential decay has no published parameters; it is listed for
            // comparison and scheduled with the cosine shape.
            LrDecayKind::Cosine | LrDecayKind::Exponential => SchedulePlan::cosine(total, warmup, peak),
        }
    }
}

impl fmt::Display for RecipePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} epochs, {:?} decay)", self.name, self.epochs, self.lr_decay)
    }
}

/// The additive study on ResNet-200 at 256px: baseline first, then one
/// entry per added component, each with its reported top-1.
pub fn additive_ladder() -> Vec<RecipePreset> {
    type Step = (&'static str, f64, fn(&mut RecipePreset));
    let steps: [Step; 10] = [
        ("cosine-lr", 79.3, |p| p.lr_decay = LrDecayKind::Cosine),
        ("longer-training", 78.8, |p| p.epochs = 350),
        ("ema", 79.1, |p| p.methods.ema = true),
        ("label-smoothing", 80.4, |p| p.methods.label_smoothing = true),
        ("stochastic-depth", 80.6, |p| p.methods.stochastic_depth = true),
        ("randaugment", 81.0, |p| p.methods.randaugment = true),
        ("dropout-fc", 80.7, |p| p.methods.dropout_fc = true),
        ("smaller-weight-decay", 82.2, |p| p.methods.smaller_weight_decay = true),
        ("squeeze-excitation", 82.9, |p| p.methods.squeeze_excitation = true),
        ("resnet-d", 83.4, |p| p.methods.resnet_d = true),
    ];
    let mut current = RecipePreset::new(
        "ablation-00-baseline",
        90,
        LrDecayKind::Stepwise,
        OptimizerKind::Momentum,
        RecipeMethods::default(),
    );
    current.reported_top1 = Some(79.0);
    let mut ladder = vec![current.clone()];
    for (i, (name, top1, apply)) in steps.into_iter().enumerate() {
        apply(&mut current);
        current.name = format!("ablation-{:02}-{name}", i + 1);
        current.reported_top1 = Some(top1);
        current.sync_reg();
        ladder.push(current.clone());
    }
    ladder
}

/// All named presets: the three recipe comparison columns plus the ladder.
pub fn recipe_presets() -> BTreeMap<String, RecipePreset> {
    let all = RecipeMethods {
        ema: true,
        label_smoothing: true,
        stochastic_depth: true,
        randaugment: true,
        dropout_fc: true,
        smaller_weight_decay: true,
        squeeze_excitation: true,
        resnet_d: true,
    };
    let mut map = BTreeMap::new();
    for preset in [
        RecipePreset::new(
            "resnet-2015",
            90,
            LrDecayKind::Stepwise,
            OptimizerKind::Momentum,
            RecipeMethods::default(),
        ),
        RecipePreset::new("resnet-rs", 350, LrDecayKind::Cosine, OptimizerKind::Momentum, all),
        RecipePreset::new("efficientnet", 350, LrDecayKind::Exponential, OptimizerKind::RmsProp, all),
    ]
    .into_iter()
    .chain(additive_ladder())
    {
        map.insert(preset.name.clone(), preset);
    }
    map
}

pub fn preset(name: &str) -> Result<RecipePreset> {
    recipe_presets()
        .remove(name)
        .ok_or_else(|| ScheduleError::UnknownPreset(name.to_string()))
}
