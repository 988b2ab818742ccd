//! Command-line surface. [`run`] parses arguments and returns the captured
//! output so the binary and the tests share one code path.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors. Failures
//! write a JSON object `{"error": {...}}` to stderr.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use super::{
    builtin_table, emit_spec, load_measurements, parse_spec, schedule_csv, CliError, CostMetric,
    MeasurementRow, ModelSpecDocument, Result,
};
use crate::arch_graph::{build_model, shape_trace, ModelSpec, StageLayout};
use crate::augment::{self, decode_ppm, encode_ppm, AugmentPolicy, Raster};
use crate::cost_model::cost_report;
use crate::scaling::{
    apply_strategy, enumerate_grid, pareto_frontier, powerlaw_fit, recommend_strategy, speedup,
    top1_error, Overfitting, ParetoPoint, ScaleConfig, ScalingStrategy, TrainingRegime,
    PAPER_DEPTHS, PAPER_RESOLUTIONS, PAPER_WIDTHS,
};
use crate::schedules::{self, grid_reg_policy, lr_at, Decay, PeakLrRule, DEFAULT_WARMUP_EPOCHS};

#[derive(Debug, Parser)]
#[command(name = "resnet-rs", version, about = "ResNet-RS architecture, cost and recipe tooling")]
pub struct Cli {
    /// Human-readable tables instead of JSON/CSV.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model graph and report its layout and stage shapes.
    Build(BuildArgs),
    /// Analytic parameters, FLOPs, activation memory and intensity.
    Cost(CostArgs),
    /// Scaling grid with per-configuration costs and regularization (CSV).
    Grid(GridArgs),
    /// Pareto frontier of a measurement table.
    Pareto(ParetoArgs),
    /// Learning-rate schedule for a recipe preset.
    Schedule(ScheduleArgs),
    /// Scaling strategy for a training regime.
    Strategy(StrategyArgs),
    /// Apply a seeded RandAugment policy to an image.
    AugmentDemo(AugmentArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model spec JSON document.
    #[arg(long, conflicts_with_all = ["depth", "res", "se", "resnet_d", "rs", "layout"])]
    pub spec: Option<PathBuf>,
    #[arg(long, required_unless_present = "spec")]
    pub depth: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, required_unless_present = "spec")]
    pub res: Option<u32>,
    /// Squeeze-and-excitation ratio (0 disables SE).
    #[arg(long, conflicts_with = "rs")]
    pub se: Option<f64>,
    /// ResNet-D stem and downsampling.
    #[arg(long, conflicts_with = "rs")]
    pub resnet_d: bool,
    /// Shorthand for `--se 0.25 --resnet-d`.
    #[arg(long)]
    pub rs: bool,
    /// Blocks per stage, e.g. `3,4,6,3`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub layout: Option<Vec<u32>>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec> {
        if let Some(path) = &self.spec {
            let spec = parse_spec(&read_text(path)?)?;
            return Ok(if self.width != 1.0 { spec.with_width(self.width) } else { spec });
        }
        let (depth, res) = (self.depth.expect("clap requires depth"), self.res.expect("clap requires res"));
        let mut spec = if self.rs { ModelSpec::resnet_rs(depth, res) } else { ModelSpec::resnet(depth, res) };
        spec.width_mult = self.width;
        if let Some(se) = self.se {
            spec.se_ratio = se;
        }
        if self.resnet_d {
            spec.resnet_d = true;
        }
        if let Some(layout) = &self.layout {
            let counts: [u32; 4] = layout
                .as_slice()
                .try_into()
                .map_err(|_| CliError::Usage("--layout takes exactly 4 counts".into()))?;
            spec.layout_override = Some(StageLayout::new(counts)?);
        }
        // Route through the document so flags get the same checks as files.
        ModelSpecDocument::from(&spec).into_spec()
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Include every layer node in the output.
    #[arg(long)]
    pub nodes: bool,
    /// Write the resolved spec document to this path.
    #[arg(long)]
    pub emit_spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 32)]
    pub batch: u32,
    /// Bytes per activation element (2 or 4).
    #[arg(long, default_value_t = 2)]
    pub bytes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_delimiter = ',', default_values_t = PAPER_WIDTHS)]
    pub widths: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = PAPER_DEPTHS)]
    pub depths: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = PAPER_RESOLUTIONS)]
    pub resolutions: Vec<u32>,
    /// Epoch budget for the regularization columns (10, 100 or 350).
    #[arg(long, default_value_t = 350)]
    pub epochs: u32,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "table"]))]
pub struct ParetoArgs {
    /// Measurement CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Built-in table: table7 or table4.
    #[arg(long)]
    pub table: Option<String>,
    /// Cost axis: tpu_ms, v100_s or flops_b.
    #[arg(long, default_value = "tpu_ms")]
    pub cost: String,
    /// Keep only rows whose model_id starts with this prefix (repeatable).
    #[arg(long)]
    pub family: Vec<String>,
    /// Speedup of FAST over SLOW at the chosen cost, as `SLOW,FAST` labels.
    #[arg(long, value_name = "SLOW,FAST")]
    pub speedup: Vec<String>,
    /// Fit top-1 error against FLOPs over the selected rows.
    #[arg(long)]
    pub fit: bool,
    /// Drop rows above this many billion FLOPs before fitting.
    #[arg(long, requires = "fit")]
    pub fit_max_flops: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long, default_value = "resnet-rs")]
    pub preset: String,
    #[arg(long)]
    pub batch: u32,
    /// Defaults to the preset's epoch budget.
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub steps_per_epoch: u64,
    #[arg(long, default_value_t = DEFAULT_WARMUP_EPOCHS)]
    pub warmup_epochs: u32,
    /// Peak LR rule: verbatim (0.1/B) or linear-scaling (0.1*B/256).
    #[arg(long)]
    pub lr_rule: Option<String>,
    /// Write the per-step CSV here and print a JSON summary instead.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverfittingArg {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    #[arg(long)]
    pub epochs: u32,
    #[arg(long, value_enum, default_value_t = OverfittingArg::Unknown)]
    pub overfitting: OverfittingArg,
    #[arg(long)]
    pub dataset_images: Option<u64>,
    #[arg(long, requires = "base_res")]
    pub base_depth: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub base_width: f64,
    #[arg(long, requires = "base_depth")]
    pub base_res: Option<u32>,
    #[arg(long, default_value_t = 3)]
    pub steps: usize,
    #[arg(long)]
    pub resolution_cap: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pattern {
    Gradient,
    Solid,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Binary PPM (P6) input; a generated pattern is used otherwise.
    #[arg(long, conflicts_with = "pattern")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub pattern: Option<Pattern>,
    #[arg(long, default_value_t = 64)]
    pub size: u32,
    #[arg(long, default_value_t = schedules::RANDAUGMENT_LAYERS)]
    pub layers: u32,
    #[arg(long, default_value_t = 10)]
    pub magnitude: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restrict the op set, e.g. `rotate,shear_x`.
    #[arg(long, value_delimiter = ',')]
    pub ops: Option<Vec<String>>,
    /// Write the augmented image as PPM.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => failure(&CliError::Usage(e.to_string().trim_end().to_string())),
            };
        }
    };
    let mut stderr = String::new();
    match execute(&cli, &mut stderr) {
        Ok(stdout) => Outcome { code: 0, stdout, stderr },
        // Notes are dropped on failure so stderr stays a single JSON object.
        Err(e) => failure(&e),
    }
}

fn failure(e: &CliError) -> Outcome {
    let mut error = json!({
        "kind": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    if let Some(field) = e.field() {
        error["field"] = Value::from(field);
    }
    Outcome {
        code: e.exit_code(),
        stdout: String::new(),
        stderr: format!("{}\n", json!({ "error": error })),
    }
}

fn execute(cli: &Cli, stderr: &mut String) -> Result<String> {
    match &cli.command {
        Command::Build(a) => build(a, cli.pretty),
        Command::Cost(a) => cost(a, cli.pretty),
        Command::Grid(a) => grid(a, cli.pretty),
        Command::Pareto(a) => pareto(a, cli.pretty),
        Command::Schedule(a) => schedule(a, stderr),
        Command::Strategy(a) => strategy(a, cli.pretty),
        Command::AugmentDemo(a) => augment_demo(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json_line(value: &impl Serialize) -> String {
    format!("{}\n", serde_json::to_string(value).expect("output serializes"))
}

fn to_json_pretty(value: &impl Serialize) -> String {
    format!("{}\n", serde_json::to_string_pretty(value).expect("output serializes"))
}

/// `ResNet-RS-50@160`, `ResNet-101x1.5@224`.
pub fn model_label(spec: &ModelSpec) -> String {
    let family = if spec.resnet_d && spec.se_ratio > 0.0 { "ResNet-RS" } else { "ResNet" };
    let width = if spec.width_mult == 1.0 { String::new() } else { format!("x{}", spec.width_mult) };
    format!("{family}-{}{width}@{}", spec.depth, spec.resolution)
}

fn build(a: &BuildArgs, pretty: bool) -> Result<String> {
    let spec = a.model.spec()?;
    let graph = build_model(&spec)?;
    let shapes = shape_trace(&graph, spec.resolution)?;
    let layout = spec.layout()?;
    if let Some(path) = &a.emit_spec {
        write_file(path, emit_spec(&spec).as_bytes())?;
    }
    let se_blocks = graph.count(crate::arch_graph::LayerKind::Se);
    if pretty {
        let mut s = String::new();
        let _ = writeln!(s, "{}  layout {layout}  nodes {}  blocks {}  se {se_blocks}", model_label(&spec), graph.nodes.len(), graph.block_count());
        let _ = writeln!(s, "{:<6} {:>8} {:>8} {:>8}", "stage", "height", "width", "channels");
        for (name, shape) in ["stem", "c2", "c3", "c4", "c5"].iter().zip(
            std::iter::once(shapes.stem).chain(shapes.stages()),
        ) {
            let _ = writeln!(s, "{name:<6} {:>8} {:>8} {:>8}", shape.height, shape.width, shape.channels);
        }
        return Ok(s);
    }
    let mut out = json!({
        "model": model_label(&spec),
        "spec": ModelSpecDocument::from(&spec),
        "layout": layout.blocks_per_stage,
        "node_count": graph.nodes.len(),
        "block_count": graph.block_count(),
        "residual_eligible_blocks": graph.residual_eligible_blocks(),
        "se_count": se_blocks,
        "stage_shapes": shapes,
    });
    if a.nodes {
        out["nodes"] = serde_json::to_value(&graph.nodes).expect("nodes serialize");
    }
    Ok(to_json_line(&out))
}

fn cost(a: &CostArgs, pretty: bool) -> Result<String> {
    let spec = a.model.spec()?;
    let report = cost_report(&spec, a.batch, a.bytes)?;
    if pretty {
        let gb = |b: u64| b as f64 / 1e9;
        return Ok(format!(
            "{}\n  params        {:>10.2} M\n  flops         {:>10.2} B\n  activations   {:>10.2} GB total, {:.2} GB peak (batch {}, {} B/elem)\n  intensity     {:>10.2} FLOPs/byte\n",
            model_label(&spec),
            report.params as f64 / 1e6,
            report.flops as f64 / 1e9,
            gb(report.activation_bytes_total),
            gb(report.activation_bytes_peak),
            a.batch,
            a.bytes,
            report.operational_intensity,
        ));
    }
    Ok(to_json_line(&json!({
        "model": model_label(&spec),
        "spec": ModelSpecDocument::from(&spec),
        "batch": a.batch,
        "bytes_per_element": a.bytes,
        "params": report.params,
        "flops": report.flops,
        "activation_bytes_total": report.activation_bytes_total,
        "activation_bytes_peak": report.activation_bytes_peak,
        "operational_intensity": report.operational_intensity,
    })))
}

/// One grid configuration with its costs and regularization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub depth: u32,
    pub width_mult: f64,
    pub resolution: u32,
    pub params: u64,
    pub flops: u64,
    pub randaugment_magnitude: u32,
    pub stochastic_depth_rate: f64,
    pub dropout_rate: f64,
    pub label_smoothing: f64,
    pub weight_decay: f64,
    pub ema_decay: f64,
}

pub const GRID_HEADER: &str = "depth,width_mult,resolution,params,flops,randaugment_magnitude,stochastic_depth_rate,dropout_rate,label_smoothing,weight_decay,ema_decay";

pub fn grid_rows(widths: &[f64], depths: &[u32], resolutions: &[u32], epochs: u32) -> Result<Vec<GridRow>> {
    enumerate_grid(widths, depths, resolutions)?
        .into_iter()
        .map(|c| {
            let spec = ModelSpec::resnet_rs(c.depth, c.resolution).with_width(c.width_mult);
            let graph = build_model(&spec)?;
            let params = crate::cost_model::param_count(&graph);
            let flops = crate::cost_model::flop_count(&graph, c.resolution)?;
            let reg = grid_reg_policy(&c, epochs)?;
            Ok(GridRow {
                depth: c.depth,
                width_mult: c.width_mult,
                resolution: c.resolution,
                params,
                flops,
                randaugment_magnitude: reg.randaugment_magnitude,
                stochastic_depth_rate: reg.stochastic_depth_rate,
                dropout_rate: reg.dropout_rate,
                label_smoothing: reg.label_smoothing,
                weight_decay: reg.weight_decay,
                ema_decay: reg.ema_decay,
            })
        })
        .collect()
}

fn grid(a: &GridArgs, pretty: bool) -> Result<String> {
    let rows = grid_rows(&a.widths, &a.depths, &a.resolutions, a.epochs)?;
    let mut s = String::new();
    if pretty {
        let _ = writeln!(s, "{:>5} {:>5} {:>5} {:>10} {:>10} {:>3} {:>5} {:>5} {:>5}", "depth", "width", "res", "params_m", "flops_b", "ra", "sd", "do", "ls");
        for r in &rows {
            let _ = writeln!(
                s,
                "{:>5} {:>5} {:>5} {:>10.2} {:>10.2} {:>3} {:>5} {:>5} {:>5}",
                r.depth, r.width_mult, r.resolution, r.params as f64 / 1e6, r.flops as f64 / 1e9,
                r.randaugment_magnitude, r.stochastic_depth_rate, r.dropout_rate, r.label_smoothing,
            );
        }
        return Ok(s);
    }
    if a.format == TableFormat::Json {
        return Ok(to_json_line(&rows));
    }
    s.push_str(GRID_HEADER);
    s.push('\n');
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.depth, r.width_mult, r.resolution, r.params, r.flops, r.randaugment_magnitude,
            r.stochastic_depth_rate, r.dropout_rate, r.label_smoothing, r.weight_decay, r.ema_decay,
        );
    }
    Ok(s)
}

fn find_row<'a>(rows: &'a [MeasurementRow], label: &str) -> Result<&'a MeasurementRow> {
    rows.iter().find(|r| r.label() == label).ok_or_else(|| CliError::Invariant {
        field: "speedup".into(),
        message: format!("no row labelled `{label}`"),
    })
}

fn pareto(a: &ParetoArgs, pretty: bool) -> Result<String> {
    let metric: CostMetric = a.cost.parse()?;
    let (source, mut rows) = match (&a.data, &a.table) {
        (Some(path), _) => (path.display().to_string(), load_measurements(path)?),
        (None, Some(name)) => (name.clone(), builtin_table(name)?),
        (None, None) => unreachable!("clap requires a source"),
    };
    let all_rows = rows.clone();
    if !a.family.is_empty() {
        rows.retain(|r| a.family.iter().any(|f| r.model_id.starts_with(f.as_str())));
    }
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for r in &rows {
        match r.cost(metric) {
            Some(_) => points.push(r.pareto_point(metric)?),
            None => skipped.push(r.label()),
        }
    }
    let frontier = pareto_frontier(&points)?;

    let mut speedups = Vec::new();
    for pair in &a.speedup {
        let (slow, fast) = pair.split_once(',').ok_or_else(|| {
            CliError::Usage(format!("--speedup expects SLOW,FAST labels, got `{pair}`"))
        })?;
        let slow_pt = find_row(&all_rows, slow)?.pareto_point(metric)?;
        let fast_pt = find_row(&all_rows, fast)?.pareto_point(metric)?;
        speedups.push(json!({
            "slow": slow,
            "fast": fast,
            "speedup": speedup(&slow_pt, &fast_pt),
        }));
    }

    let fit = if a.fit {
        let samples: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| a.fit_max_flops.is_none_or(|m| r.flops_b <= m))
            .map(|r| (r.flops_b, top1_error(r.top1)))
            .collect();
        let f = powerlaw_fit(&samples)?;
        Some(json!({
            "samples": samples.len(),
            "exponent": f.exponent,
            "coefficient": f.coefficient,
            "r_squared": f.r_squared,
        }))
    } else {
        None
    };

    if pretty {
        let mut s = String::new();
        let _ = writeln!(s, "frontier of {source} by {metric} ({} of {} points)", frontier.len(), points.len());
        let _ = writeln!(s, "{:<28} {:>10} {:>7}", "model", metric, "top1");
        for p in &frontier {
            let _ = writeln!(s, "{:<28} {:>10} {:>7}", p.model_id, p.cost, p.quality);
        }
        for sp in &speedups {
            let _ = writeln!(s, "speedup {} over {}: {:.2}x", sp["fast"].as_str().unwrap_or(""), sp["slow"].as_str().unwrap_or(""), sp["speedup"].as_f64().unwrap_or(f64::NAN));
        }
        if let Some(f) = &fit {
            let _ = writeln!(s, "power law: exponent {:.4}, r^2 {:.4}", f["exponent"].as_f64().unwrap_or(f64::NAN), f["r_squared"].as_f64().unwrap_or(f64::NAN));
        }
        return Ok(s);
    }
    let mut out = json!({
        "source": source,
        "cost_metric": metric,
        "point_count": points.len(),
        "skipped": skipped,
        "frontier": frontier,
        "speedups": speedups,
    });
    if let Some(f) = fit {
        out["fit"] = f;
    }
    Ok(to_json_line(&out))
}

fn schedule(a: &ScheduleArgs, stderr: &mut String) -> Result<String> {
    let preset = schedules::preset(&a.preset)?;
    let rule = match &a.lr_rule {
        Some(r) => r.parse::<PeakLrRule>()?,
        None => {
            stderr.push_str(
                "note: peak LR follows the verbatim 0.1/B rule; pass --lr-rule linear-scaling for 0.1*B/256\n",
            );
            PeakLrRule::Verbatim
        }
    };
    let epochs = a.epochs.unwrap_or(preset.epochs);
    let plan = preset.schedule_plan(rule, a.batch, epochs, a.steps_per_epoch, a.warmup_epochs)?;
    let (ema, sd) = (preset.reg.ema_decay, preset.reg.stochastic_depth_rate);
    let reg = schedules::RegConfig { epochs, ..preset.reg };
    let csv = schedule_csv(&plan, ema, sd)?;
    let Some(path) = &a.dump else {
        return Ok(csv);
    };
    write_file(path, csv.as_bytes())?;
    let decay = match plan.decay {
        Decay::Cosine => "cosine",
        Decay::Stepwise { .. } => "stepwise",
    };
    Ok(to_json_pretty(&json!({
        "preset": preset.name,
        "lr_rule": rule,
        "batch": a.batch,
        "epochs": epochs,
        "steps_per_epoch": a.steps_per_epoch,
        "total_steps": plan.total_steps,
        "warmup_steps": plan.warmup_steps,
        "peak_lr": plan.peak_lr,
        "final_lr": lr_at(plan.total_steps, &plan)?,
        "decay": decay,
        "ema_decay": ema,
        "sd_final_rate": sd,
        "reg": reg,
        "dump": path.display().to_string(),
    })))
}

fn strategy(a: &StrategyArgs, pretty: bool) -> Result<String> {
    let regime = TrainingRegime {
        epochs: a.epochs,
        dataset_images: a.dataset_images,
        overfitting_expected: match a.overfitting {
            OverfittingArg::Yes => Overfitting::Yes,
            OverfittingArg::No => Overfitting::No,
            OverfittingArg::Unknown => Overfitting::Unknown,
        },
    };
    let mut strat: ScalingStrategy = recommend_strategy(&regime);
    if let Some(cap) = a.resolution_cap {
        strat.resolution_cap = cap;
    }
    let sequence = match (a.base_depth, a.base_res) {
        (Some(d), Some(r)) => {
            let configs = apply_strategy(ScaleConfig::new(d, a.base_width, r), strat, a.steps)?;
            let mut rows = Vec::with_capacity(configs.len());
            for c in configs {
                let spec = ModelSpec::resnet_rs(c.depth, c.resolution).with_width(c.width_mult);
                let report = cost_report(&spec, 1, 2)?;
                rows.push(json!({
                    "depth": c.depth,
                    "width_mult": c.width_mult,
                    "resolution": c.resolution,
                    "params": report.params,
                    "flops": report.flops,
                }));
            }
            Some(rows)
        }
        _ => None,
    };
    if pretty {
        let mut s = String::new();
        let _ = writeln!(s, "{} epochs -> {:?} (resolution cap {})", a.epochs, strat.kind, strat.resolution_cap);
        if let Some(note) = strat.advisory() {
            let _ = writeln!(s, "note: {note}");
        }
        for row in sequence.iter().flatten() {
            let _ = writeln!(s, "  {}x{}@{}  {:.1}M params  {:.1}B flops", row["depth"], row["width_mult"], row["resolution"], row["params"].as_f64().unwrap_or(0.0) / 1e6, row["flops"].as_f64().unwrap_or(0.0) / 1e9);
        }
        return Ok(s);
    }
    let mut out = json!({
        "regime": regime,
        "strategy": strat.kind,
        "resolution_cap": strat.resolution_cap,
        "advisory": strat.advisory(),
    });
    if let Some(seq) = sequence {
        out["sequence"] = Value::from(seq);
    }
    Ok(to_json_line(&out))
}

fn augment_demo(a: &AugmentArgs) -> Result<String> {
    let image = match (&a.input, a.pattern) {
        (Some(path), _) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            decode_ppm(&bytes)?
        }
        (None, Some(Pattern::Solid)) => Raster::solid(a.size, a.size, [200, 60, 30])?,
        (None, _) => Raster::gradient(a.size, a.size)?,
    };
    let mut policy = AugmentPolicy::standard(a.layers, a.magnitude, a.seed);
    if let Some(ops) = &a.ops {
        policy.op_set = ops.clone();
    }
    let drawn = augment::sample_policy_instance(&policy)?;
    let out = augment::apply(&image, &drawn)?;
    if let Some(path) = &a.output {
        write_file(path, &encode_ppm(&out))?;
    }
    let l1 = image.l1_distance(&out);
    Ok(to_json_pretty(&json!({
        "policy": policy,
        "ops": drawn,
        "width": out.width(),
        "height": out.height(),
        "l1_change": l1,
        "mean_abs_change": l1 as f64 / image.data().len() as f64,
        "output": a.output.as_ref().map(|p| p.display().to_string()),
    })))
}

/// Reference table rows as Pareto points at a cost metric.
pub fn table_points(name: &str, metric: CostMetric) -> Result<Vec<ParetoPoint>> {
    builtin_table(name)?
        .iter()
        .filter(|r| r.cost(metric).is_some())
        .map(|r| r.pareto_point(metric))
        .collect()
}
