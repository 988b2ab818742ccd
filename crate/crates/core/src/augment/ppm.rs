//! Binary PPM (P6) rasters with a maximum value of 255.

use super::{AugmentError, Raster, Result};

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_header_number(bytes: &[u8], pos: &mut usize, field: &str) -> Result<u32> {
    *pos = skip_whitespace_and_comments(bytes, *pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(AugmentError::Ppm(format!("missing {field}")));
    }
    // At most 10 digits keeps the value inside u64 before the range check.
    if *pos - start > 10 {
        return Err(AugmentError::Ppm(format!("{field} is too large")));
    }
    let digits = std::str::from_utf8(&bytes[start..*pos]).expect("ascii digits");
    let value: u64 = digits.parse().expect("digits parse");
    u32::try_from(value).map_err(|_| AugmentError::Ppm(format!("{field} is too large")))
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Raster> {
    if !bytes.starts_with(b"P6") {
        return Err(AugmentError::Ppm("missing P6 magic".into()));
    }
    let mut pos = 2;
    let width = read_header_number(bytes, &mut pos, "width")?;
    let height = read_header_number(bytes, &mut pos, "height")?;
    let maxval = read_header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(AugmentError::Ppm(format!("maxval must be 255, got {maxval}")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(AugmentError::Ppm("missing whitespace after header".into())),
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| AugmentError::Ppm("dimensions overflow".into()))?;
    let data = &bytes[pos..];
    if data.len() != expected {
        return Err(AugmentError::Ppm(format!(
            "expected {expected} bytes of pixel data for {width}x{height}, found {}",
            data.len()
        )));
    }
    Raster::new(width, height, data.to_vec())
}

pub fn encode_ppm(raster: &Raster) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", raster.width(), raster.height()).into_bytes();
    out.extend_from_slice(raster.data());
    out
}
