//! RandAugment policies over small 8-bit RGB rasters.
//!
//! A policy draws `num_layers` transforms uniformly with replacement and maps
//! the global magnitude `M` in `[0, 30]` linearly onto each transform's
//! parameter range. Geometric transforms use nearest-neighbour sampling about
//! the image centre and fill uncovered pixels with [`FILL`].

mod ops;
pub mod ppm;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ops::{OpKind, OpRange, OP_RANGES};
pub use ppm::{decode_ppm, encode_ppm};

pub const MAX_MAGNITUDE: u32 = 30;
pub const FILL: [u8; 3] = [128, 128, 128];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("unknown augmentation op `{0}`")]
    UnknownOp(String),
    #[error("magnitude {0} outside [0, 30]")]
    Magnitude(u32),
    #[error("op `{op}` parameter {param} is not usable")]
    BadParam { op: String, param: f64 },
    #[error("invalid raster: {0}")]
    Raster(String),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("malformed PPM: {0}")]
    Ppm(String),
}

pub type Result<T> = std::result::Result<T, AugmentError>;

/// Packed RGB pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(AugmentError::Raster("dimensions must be positive".into()));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(AugmentError::Raster(format!(
                "expected {expected} bytes for {width}x{height}, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn solid(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.repeat(width as usize * height as usize);
        Self::new(width, height, data)
    }

    /// Deterministic test pattern: horizontal red ramp, vertical green ramp,
    /// checkerboard blue.
    pub fn gradient(width: u32, height: u32) -> Result<Self> {
        let (dx, dy) = (width.saturating_sub(1).max(1), height.saturating_sub(1).max(1));
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.push((x * 255 / dx) as u8);
                data.push((y * 255 / dy) as u8);
                data.push(if (x / 4 + y / 4) % 2 == 0 { 40 } else { 220 });
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Sum of absolute byte differences.
    pub fn l1_distance(&self, other: &Raster) -> u64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub num_layers: u32,
    pub magnitude: u32,
    pub op_set: Vec<String>,
    pub seed: u64,
}

impl AugmentPolicy {
    /// Policy over all standard transforms.
    pub fn standard(num_layers: u32, magnitude: u32, seed: u64) -> Self {
        Self {
            num_layers,
            magnitude,
            op_set: OpKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<Vec<OpKind>> {
        if self.op_set.is_empty() {
            return Err(AugmentError::Policy("op_set is empty".into()));
        }
        if self.magnitude > MAX_MAGNITUDE {
            return Err(AugmentError::Magnitude(self.magnitude));
        }
        self.op_set.iter().map(|n| n.parse()).collect()
    }
}

/// One drawn transform and its parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpInstance {
    pub op: String,
    pub param: f64,
}

impl OpInstance {
    pub fn new(op: impl Into<String>, param: f64) -> Self {
        Self { op: op.into(), param }
    }
}

/// Parameter for `op_name` at magnitude `m`, before any random sign flip.
pub fn magnitude_to_param(op_name: &str, m: u32) -> Result<f64> {
    if m > MAX_MAGNITUDE {
        return Err(AugmentError::Magnitude(m));
    }
    let kind: OpKind = op_name.parse()?;
    Ok(kind.range().at_magnitude(m))
}

/// Draws `num_layers` transforms from the policy's seeded generator. Ops with
/// a symmetric range get a random sign.
pub fn sample_policy_instance(policy: &AugmentPolicy) -> Result<Vec<OpInstance>> {
    let kinds = policy.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut drawn = Vec::with_capacity(policy.num_layers as usize);
    for _ in 0..policy.num_layers {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let range = kind.range();
        let mut param = range.at_magnitude(policy.magnitude);
        if range.signed && rng.gen_bool(0.5) {
            param = -param;
        }
        drawn.push(OpInstance::new(kind.name(), param));
    }
    Ok(drawn)
}

/// Applies the ops in order. Output dimensions always equal the input's.
pub fn apply(raster: &Raster, ops: &[OpInstance]) -> Result<Raster> {
    let mut current = raster.clone();
    for op in ops {
        let kind: OpKind = op.op.parse()?;
        if !op.param.is_finite() {
            return Err(AugmentError::BadParam {
                op: op.op.clone(),
                param: op.param,
            });
        }
        current = kind.apply(&current, op.param);
    }
    Ok(current)
}
