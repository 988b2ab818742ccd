//! File formats and reference data: model spec JSON documents, measurement
//! CSVs (with the embedded reference tables), schedule CSV dumps, and the
//! command-line surface in [`commands`].

pub mod commands;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch_graph::{ArchError, ModelSpec, StageLayout, MIN_RESOLUTION};
use crate::augment::AugmentError;
use crate::cost_model::CostError;
use crate::scaling::{ParetoPoint, ScalingError};
use crate::schedules::{lr_at, ScheduleError, SchedulePlan};

pub const SCHEMA_VERSION: &str = "1";
pub const MEASUREMENT_HEADER: &str = "model_id,resolution,params_m,flops_b,v100_s,tpu_ms,top1";
pub const SCHEDULE_HEADER: &str = "step,lr,ema_decay,sd_final_rate";

pub const TABLE7_CSV: &str = include_str!("../../tables/table7.csv");
pub const TABLE4_CSV: &str = include_str!("../../tables/table4.csv");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("unsupported schema version {found:?}; expected \"{SCHEMA_VERSION}\"")]
    SchemaVersion { found: String },
    #[error("{field}: {message}")]
    Invariant { field: String, message: String },
    #[error("row {row}, column `{column}`: {message}")]
    Csv { row: usize, column: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Json { .. } | CliError::SchemaVersion { .. } => "spec_document",
            CliError::Invariant { .. } => "invariant",
            CliError::Csv { .. } => "measurements",
            CliError::Io(_) => "io",
            CliError::Arch(_) => "architecture",
            CliError::Cost(_) => "cost",
            CliError::Scaling(_) => "scaling",
            CliError::Schedule(_) => "schedule",
            CliError::Augment(_) => "augment",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Field path for document errors, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            CliError::Json { path, .. } => Some(path),
            CliError::Invariant { field, .. } => Some(field),
            CliError::Csv { column, .. } => Some(column),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Wire form of a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecDocument {
    pub schema: String,
    pub depth: i64,
    pub width_mult: f64,
    pub resolution: i64,
    pub resnet_d: bool,
    pub se_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_override: Option<Vec<i64>>,
}

impl From<&ModelSpec> for ModelSpecDocument {
    fn from(spec: &ModelSpec) -> Self {
        Self {
            schema: SCHEMA_VERSION.to_string(),
            depth: i64::from(spec.depth),
            width_mult: spec.width_mult,
            resolution: i64::from(spec.resolution),
            resnet_d: spec.resnet_d,
            se_ratio: spec.se_ratio,
            layout_override: spec
                .layout_override
                .map(|l| l.blocks_per_stage.iter().map(|&b| i64::from(b)).collect()),
        }
    }
}

fn invariant(field: &str, message: impl Into<String>) -> CliError {
    CliError::Invariant {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive_u32(field: &str, value: i64) -> Result<u32> {
    if value <= 0 {
        return Err(invariant(field, format!("must be positive, got {value}")));
    }
    u32::try_from(value).map_err(|_| invariant(field, format!("{value} is too large")))
}

impl ModelSpecDocument {
    pub fn into_spec(self) -> Result<ModelSpec> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::SchemaVersion { found: self.schema });
        }
        let depth = positive_u32("depth", self.depth)?;
        let resolution = positive_u32("resolution", self.resolution)?;
        if resolution < MIN_RESOLUTION {
            return Err(invariant(
                "resolution",
                format!("must be at least {MIN_RESOLUTION}, got {resolution}"),
            ));
        }
        if !(self.width_mult.is_finite() && self.width_mult > 0.0) {
            return Err(invariant("width_mult", format!("must be positive, got {}", self.width_mult)));
        }
        if !(0.0..=1.0).contains(&self.se_ratio) {
            return Err(invariant("se_ratio", format!("must lie in [0, 1], got {}", self.se_ratio)));
        }
        let layout_override = match self.layout_override {
            None => None,
            Some(blocks) => {
                let blocks: [i64; 4] = blocks
                    .try_into()
                    .map_err(|b: Vec<i64>| invariant("layout_override", format!("expected 4 stage counts, got {}", b.len())))?;
                let mut counts = [0u32; 4];
                for (i, (&b, slot)) in blocks.iter().zip(counts.iter_mut()).enumerate() {
                    *slot = positive_u32(&format!("layout_override[{i}]"), b)?;
                }
                Some(StageLayout::new(counts)?)
            }
        };
        let spec = ModelSpec {
            depth,
            width_mult: self.width_mult,
            resolution,
            resnet_d: self.resnet_d,
            se_ratio: self.se_ratio,
            layout_override,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses a model spec JSON document.
pub fn parse_spec(text: &str) -> Result<ModelSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ModelSpecDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        // A missing field is reported at the enclosing path; name it.
        let msg = inner.to_string();
        let named = msg
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
            .map(str::to_string);
        let path = match (named, path.as_str()) {
            (Some(field), ".") => field,
            (Some(field), p) => format!("{p}.{field}"),
            (None, p) => p.to_string(),
        };
        CliError::Json { path, message: msg }
    })?;
    doc.into_spec()
}

pub fn emit_spec(spec: &ModelSpec) -> String {
    serde_json::to_string_pretty(&ModelSpecDocument::from(spec)).expect("document serializes")
}

/// One row of a speed-accuracy table. Latencies are normalised to seconds on
/// V100 and milliseconds on TPU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub model_id: String,
    pub resolution: u32,
    pub params_m: f64,
    pub flops_b: f64,
    pub v100_s: Option<f64>,
    pub tpu_ms: Option<f64>,
    pub top1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tpu_mem_gb: Option<f64>,
}

impl MeasurementRow {
    /// `model_id@resolution`, unique within the reference tables.
    pub fn label(&self) -> String {
        format!("{}@{}", self.model_id, self.resolution)
    }

    pub fn cost(&self, metric: CostMetric) -> Option<f64> {
        match metric {
            CostMetric::TpuMs => self.tpu_ms,
            CostMetric::V100S => self.v100_s,
            CostMetric::FlopsB => Some(self.flops_b),
        }
    }

    pub fn pareto_point(&self, metric: CostMetric) -> Result<ParetoPoint> {
        let cost = self.cost(metric).ok_or_else(|| CliError::Csv {
            row: 0,
            column: metric.to_string(),
            message: format!("{} has no {metric} measurement", self.label()),
        })?;
        Ok(ParetoPoint::new(self.label(), cost, self.top1)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMetric {
    TpuMs,
    V100S,
    FlopsB,
}

impl fmt::Display for CostMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMetric::TpuMs => "tpu_ms",
            CostMetric::V100S => "v100_s",
            CostMetric::FlopsB => "flops_b",
        })
    }
}

impl FromStr for CostMetric {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tpu_ms" => Ok(CostMetric::TpuMs),
            "v100_s" => Ok(CostMetric::V100S),
            "flops_b" => Ok(CostMetric::FlopsB),
            other => Err(CliError::Usage(format!(
                "unknown cost metric `{other}` (expected tpu_ms, v100_s or flops_b)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    ModelId,
    Resolution,
    ParamsM,
    FlopsB,
    /// Latency column with the factor converting it to the canonical unit.
    V100 { to_seconds: u32 },
    Tpu { to_ms: u32 },
    Top1,
    TpuMemGb,
}

fn column_for(name: &str) -> Option<Column> {
    Some(match name {
        "model_id" => Column::ModelId,
        "resolution" => Column::Resolution,
        "params_m" => Column::ParamsM,
        "flops_b" => Column::FlopsB,
        "v100_s" => Column::V100 { to_seconds: 1 },
        "v100_ms" => Column::V100 { to_seconds: 1000 },
        "tpu_ms" => Column::Tpu { to_ms: 1 },
        "tpu_s" => Column::Tpu { to_ms: 1000 },
        "top1" => Column::Top1,
        "tpu_mem_gb" => Column::TpuMemGb,
        _ => return None,
    })
}

/// Parses measurement CSV text. `#` lines are comments; blank optional cells
/// are absent values. Latency columns may use either unit suffix
/// (`v100_s`/`v100_ms`, `tpu_ms`/`tpu_s`).
pub fn parse_measurements(text: &str) -> Result<Vec<MeasurementRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header_err = |message: String| CliError::Csv {
        row: 0,
        column: "header".into(),
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(header_err("empty measurement file".into()));
    }
    let mut columns = Vec::with_capacity(headers.len());
    for name in headers.iter() {
        let col = column_for(name).ok_or_else(|| header_err(format!("unknown column `{name}`")))?;
        let clash = columns.iter().any(|c: &Column| {
            std::mem::discriminant(c) == std::mem::discriminant(&col)
        });
        if clash {
            return Err(header_err(format!("duplicate column `{name}`")));
        }
        columns.push(col);
    }
    for required in ["model_id", "resolution", "params_m", "flops_b", "top1"] {
        if !headers.iter().any(|h| h == required) {
            return Err(header_err(format!("missing required column `{required}`")));
        }
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Csv {
            row,
            column: "record".into(),
            message: e.to_string(),
        })?;
        let mut m = MeasurementRow {
            model_id: String::new(),
            resolution: 0,
            params_m: 0.0,
            flops_b: 0.0,
            v100_s: None,
            tpu_ms: None,
            top1: 0.0,
            tpu_mem_gb: None,
        };
        for ((cell, name), col) in record.iter().zip(headers.iter()).zip(&columns) {
            let bad = |message: String| CliError::Csv {
                row,
                column: name.to_string(),
                message,
            };
            let number = || -> Result<f64> {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| bad(format!("`{cell}` is not a number")))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad(format!("`{cell}` must be positive")));
                }
                Ok(v)
            };
            let optional = || -> Result<Option<f64>> {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    number().map(Some)
                }
            };
            match *col {
                Column::ModelId => {
                    if cell.is_empty() {
                        return Err(bad("model_id is empty".into()));
                    }
                    m.model_id = cell.to_string();
                }
                Column::Resolution => {
                    m.resolution = cell
                        .parse()
                        .ok()
                        .filter(|&r: &u32| r > 0)
                        .ok_or_else(|| bad(format!("`{cell}` is not a positive integer")))?;
                }
                Column::ParamsM => m.params_m = number()?,
                Column::FlopsB => m.flops_b = number()?,
                Column::V100 { to_seconds } => {
                    m.v100_s = optional()?.map(|v| v / f64::from(to_seconds));
                }
                Column::Tpu { to_ms } => m.tpu_ms = optional()?.map(|v| v * f64::from(to_ms)),
                Column::Top1 => {
                    let v = number()?;
                    if v >= 100.0 {
                        return Err(bad(format!("top-1 {v} outside (0, 100)")));
                    }
                    m.top1 = v;
                }
                Column::TpuMemGb => m.tpu_mem_gb = optional()?,
            }
        }
        rows.push(m);
    }
    if rows.is_empty() {
        return Err(CliError::Csv {
            row: 0,
            column: "record".into(),
            message: "no measurement rows".into(),
        });
    }
    Ok(rows)
}

pub fn load_measurements(path: impl AsRef<Path>) -> Result<Vec<MeasurementRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_measurements(&text)
}

/// Embedded reference table by name (`table4` or `table7`).
pub fn builtin_table(name: &str) -> Result<Vec<MeasurementRow>> {
    match name {
        "table4" => parse_measurements(TABLE4_CSV),
        "table7" => parse_measurements(TABLE7_CSV),
        other => Err(CliError::Usage(format!(
            "unknown built-in table `{other}` (expected table4 or table7)"
        ))),
    }
}

/// Writes one CSV row per step with the schedule header.
pub fn schedule_csv(plan: &SchedulePlan, ema_decay: f64, sd_final_rate: f64) -> Result<String> {
    let mut out = String::with_capacity(plan.total_steps as usize * 32);
    out.push_str(SCHEDULE_HEADER);
    out.push('\n');
    for step in 0..=plan.total_steps {
        let lr = lr_at(step, plan)?;
        out.push_str(&format!("{step},{lr:e},{ema_decay},{sd_final_rate}\n"));
    }
    Ok(out)
}
