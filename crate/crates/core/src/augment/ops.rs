use std::str::FromStr;

use super::{AugmentError, Raster, FILL, MAX_MAGNITUDE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Identity,
    AutoContrast,
    Equalize,
    Rotate,
    Solarize,
    Color,
    Posterize,
    Contrast,
    Brightness,
    Sharpness,
    ShearX,
    ShearY,
    TranslateX,
    TranslateY,
}

/// Linear parameter range swept by magnitude 0..=30. `signed` ops are drawn
/// with a random sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpRange {
    pub at_zero: f64,
    pub at_max: f64,
    pub signed: bool,
}

impl OpRange {
    pub fn at_magnitude(&self, m: u32) -> f64 {
        let t = f64::from(m.min(MAX_MAGNITUDE)) / f64::from(MAX_MAGNITUDE);
        self.at_zero + (self.at_max - self.at_zero) * t
    }
}

const fn range(at_zero: f64, at_max: f64, signed: bool) -> OpRange {
    OpRange {
        at_zero,
        at_max,
        signed,
    }
}

/// Parameter ranges. Rotation is in degrees, shear is the shear coefficient,
/// translation a fraction of the image side, the enhancement ops take the
/// offset of their blend factor from 1, solarize a threshold and posterize a
/// bit count.
pub const OP_RANGES: [(OpKind, OpRange); 14] = [
    (OpKind::Identity, range(0.0, 0.0, false)),
    (OpKind::AutoContrast, range(0.0, 0.0, false)),
    (OpKind::Equalize, range(0.0, 0.0, false)),
    (OpKind::Rotate, range(0.0, 30.0, true)),
    (OpKind::Solarize, range(256.0, 0.0, false)),
    (OpKind::Color, range(0.0, 0.9, true)),
    (OpKind::Posterize, range(8.0, 4.0, false)),
    (OpKind::Contrast, range(0.0, 0.9, true)),
    (OpKind::Brightness, range(0.0, 0.9, true)),
    (OpKind::Sharpness, range(0.0, 0.9, true)),
    (OpKind::ShearX, range(0.0, 0.3, true)),
    (OpKind::ShearY, range(0.0, 0.3, true)),
    (OpKind::TranslateX, range(0.0, 0.45, true)),
    (OpKind::TranslateY, range(0.0, 0.45, true)),
];

impl OpKind {
    pub const ALL: [OpKind; 14] = [
        OpKind::Identity,
        OpKind::AutoContrast,
        OpKind::Equalize,
        OpKind::Rotate,
        OpKind::Solarize,
        OpKind::Color,
        OpKind::Posterize,
        OpKind::Contrast,
        OpKind::Brightness,
        OpKind::Sharpness,
        OpKind::ShearX,
        OpKind::ShearY,
        OpKind::TranslateX,
        OpKind::TranslateY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Identity => "identity",
            OpKind::AutoContrast => "autocontrast",
            OpKind::Equalize => "equalize",
            OpKind::Rotate => "rotate",
            OpKind::Solarize => "solarize",
            OpKind::Color => "color",
            OpKind::Posterize => "posterize",
            OpKind::Contrast => "contrast",
            OpKind::Brightness => "brightness",
            OpKind::Sharpness => "sharpness",
            OpKind::ShearX => "shear_x",
            OpKind::ShearY => "shear_y",
            OpKind::TranslateX => "translate_x",
            OpKind::TranslateY => "translate_y",
        }
    }

    pub fn range(self) -> OpRange {
        OP_RANGES
            .iter()
            .find(|(k, _)| *k == self)
            .map(|(_, r)| *r)
            .expect("every op has a range")
    }

    /// Whether the magnitude changes what the op does.
    pub fn is_parametric(self) -> bool {
        let r = self.range();
        r.at_zero != r.at_max
    }

    pub fn is_geometric(self) -> bool {
        matches!(
            self,
            OpKind::Rotate | OpKind::ShearX | OpKind::ShearY | OpKind::TranslateX | OpKind::TranslateY
        )
    }

    pub(super) fn apply(self, img: &Raster, param: f64) -> Raster {
        let (w, h) = (f64::from(img.width()), f64::from(img.height()));
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        match self {
            OpKind::Identity => img.clone(),
            OpKind::AutoContrast => per_channel_lut(img, autocontrast_lut),
            OpKind::Equalize => per_channel_lut(img, equalize_lut),
            OpKind::Rotate => {
                let (sin, cos) = (-param.to_radians()).sin_cos();
                warp(img, |x, y| {
                    let (dx, dy) = (x - cx, y - cy);
                    (cx + cos * dx - sin * dy, cy + sin * dx + cos * dy)
                })
            }
            OpKind::ShearX => warp(img, |x, y| (x - param * (y - cy), y)),
            OpKind::ShearY => warp(img, |x, y| (x, y - param * (x - cx))),
            OpKind::TranslateX => warp(img, |x, y| (x - param * w, y)),
            OpKind::TranslateY => warp(img, |x, y| (x, y - param * h)),
            OpKind::Solarize => map_bytes(img, |v| if f64::from(v) >= param { 255 - v } else { v }),
            OpKind::Posterize => {
                let bits = param.round().clamp(1.0, 8.0) as u32;
                let mask = !((1u16 << (8 - bits)) - 1) as u8;
                map_bytes(img, |v| v & mask)
            }
            OpKind::Brightness => blend(img, &Raster::solid(img.width(), img.height(), [0; 3]).expect("same dims"), param),
            OpKind::Color => blend(img, &grayscale(img), param),
            OpKind::Contrast => {
                let gray = grayscale(img);
                let n = gray.data().len() / 3;
                let mean = gray.data().iter().step_by(3).map(|&v| u64::from(v)).sum::<u64>() as f64 / n as f64;
                let m = (mean + 0.5).floor() as u8;
                blend(img, &Raster::solid(img.width(), img.height(), [m; 3]).expect("same dims"), param)
            }
            OpKind::Sharpness => blend(img, &smooth(img), param),
        }
    }
}

impl FromStr for OpKind {
    type Err = AugmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| AugmentError::UnknownOp(s.to_string()))
    }
}

fn map_bytes(img: &Raster, f: impl Fn(u8) -> u8) -> Raster {
    let data = img.data().iter().map(|&v| f(v)).collect();
    Raster::new(img.width(), img.height(), data).expect("same dims")
}

/// Inverse-maps every output pixel to a source position; nearest neighbour,
/// out-of-bounds sources take the fill colour.
fn warp(img: &Raster, src_of: impl Fn(f64, f64) -> (f64, f64)) -> Raster {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = src_of(f64::from(x), f64::from(y));
            let (sx, sy) = (sx.round(), sy.round());
            if sx >= 0.0 && sy >= 0.0 && sx < f64::from(w) && sy < f64::from(h) {
                data.extend_from_slice(&img.pixel(sx as u32, sy as u32));
            } else {
                data.extend_from_slice(&FILL);
            }
        }
    }
    Raster::new(w, h, data).expect("same dims")
}

/// `degenerate + (1 + offset) * (img - degenerate)`, rounded and clamped.
fn blend(img: &Raster, degenerate: &Raster, offset: f64) -> Raster {
    let factor = 1.0 + offset;
    let data = img
        .data()
        .iter()
        .zip(degenerate.data())
        .map(|(&v, &d)| {
            let (v, d) = (f64::from(v), f64::from(d));
            (d + factor * (v - d)).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Raster::new(img.width(), img.height(), data).expect("same dims")
}

/// ITU-R 601-2 luma replicated over three channels.
fn grayscale(img: &Raster) -> Raster {
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        let l = (u32::from(px[0]) * 19595 + u32::from(px[1]) * 38470 + u32::from(px[2]) * 7471 + 0x8000) >> 16;
        let l = l.min(255) as u8;
        data.extend_from_slice(&[l, l, l]);
    }
    Raster::new(img.width(), img.height(), data).expect("same dims")
}

/// 3x3 smoothing with centre weight 5 (sum 13); border pixels unchanged.
fn smooth(img: &Raster) -> Raster {
    let (w, h) = (img.width(), img.height());
    let mut out = img.data().to_vec();
    if w < 3 || h < 3 {
        return img.clone();
    }
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            for c in 0..3 {
                let mut acc = 0u32;
                for dy in 0..3 {
                    for dx in 0..3 {
                        let weight = if dx == 1 && dy == 1 { 5 } else { 1 };
                        acc += weight * u32::from(img.pixel(x + dx - 1, y + dy - 1)[c]);
                    }
                }
                let i = (y as usize * w as usize + x as usize) * 3 + c;
                out[i] = ((acc + 6) / 13) as u8;
            }
        }
    }
    Raster::new(w, h, out).expect("same dims")
}

fn per_channel_lut(img: &Raster, make_lut: fn(&[u64; 256]) -> [u8; 256]) -> Raster {
    let mut luts = [[0u8; 256]; 3];
    for (c, lut) in luts.iter_mut().enumerate() {
        let mut hist = [0u64; 256];
        for px in img.data().chunks_exact(3) {
            hist[px[c] as usize] += 1;
        }
        *lut = make_lut(&hist);
    }
    let mut data = img.data().to_vec();
    for px in data.chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = luts[c][px[c] as usize];
        }
    }
    Raster::new(img.width(), img.height(), data).expect("same dims")
}

fn identity_lut() -> [u8; 256] {
    std::array::from_fn(|i| i as u8)
}

fn autocontrast_lut(hist: &[u64; 256]) -> [u8; 256] {
    let lo = hist.iter().position(|&n| n > 0);
    let hi = hist.iter().rposition(|&n| n > 0);
    match (lo, hi) {
        (Some(lo), Some(hi)) if hi > lo => {
            let scale = 255.0 / (hi - lo) as f64;
            std::array::from_fn(|i| ((i as f64 - lo as f64) * scale).round().clamp(0.0, 255.0) as u8)
        }
        _ => identity_lut(),
    }
}

fn equalize_lut(hist: &[u64; 256]) -> [u8; 256] {
    let Some(last) = hist.iter().rposition(|&n| n > 0) else {
        return identity_lut();
    };
    let step = (hist.iter().sum::<u64>() - hist[last]) / 255;
    if step == 0 {
        return identity_lut();
    }
    let mut lut = [0u8; 256];
    let mut n = step / 2;
    for (i, slot) in lut.iter_mut().enumerate() {
        *slot = (n / step).min(255) as u8;
        n += hist[i];
    }
    lut
}
