//! Plain file formats: binary PGM/PBM images and small helpers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Binary PGM (`P5`) of `values` scaled so that the maximum maps to white.
/// `bits` is 8 or 16; 16-bit samples are big-endian as the format requires.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64], bits: u8) -> Result<()> {
    fs::write(path, encode_pgm(width, height, values, bits)?).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(width: usize, height: usize, values: &[f64], bits: u8) -> Result<Vec<u8>> {
    if values.len() != width * height {
        return Err(Error::domain("image size does not match sample count"));
    }
    let maxval: u32 = match bits {
        8 => 255,
        16 => 65535,
        _ => return Err(Error::domain(format!("PGM depth must be 8 or 16, got {bits}"))),
    };
    let peak = values.iter().copied().filter(|v| v.is_finite()).fold(0.0_f64, f64::max);
    let scale = if peak > 0.0 { maxval as f64 / peak } else { 0.0 };
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    for v in values {
        let q = (v.max(0.0) * scale).round().min(maxval as f64) as u32;
        if bits == 8 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        }
    }
    Ok(out)
}

/// Decode a binary PGM into `(width, height, maxval, samples)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, u32, Vec<u32>)> {
    let (fields, offset) = header_fields(bytes, "P5", 3)?;
    let (w, h, maxval) = (fields[0], fields[1], fields[2] as u32);
    let body = &bytes[offset..];
    let wide = maxval > 255;
    let need = w * h * if wide { 2 } else { 1 };
    if body.len() < need {
        return Err(Error::Parse("truncated PGM body".into()));
    }
    let samples = if wide {
        body.chunks_exact(2).take(w * h).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32).collect()
    } else {
        body[..w * h].iter().map(|b| *b as u32).collect()
    };
    Ok((w, h, maxval, samples))
}

/// 1-bit binary PBM (`P4`). In PBM a set bit is black, so a transmitting
/// pixel (`true`) is written as 0.
pub fn write_pbm(path: &Path, width: usize, height: usize, bits: &[bool]) -> Result<()> {
    fs::write(path, encode_pbm(width, height, bits)?).map_err(|e| Error::io(path, e))
}

pub fn encode_pbm(width: usize, height: usize, bits: &[bool]) -> Result<Vec<u8>> {
    if bits.len() != width * height {
        return Err(Error::domain("image size does not match sample count"));
    }
    let mut out = format!("P4\n{width} {height}\n").into_bytes();
    let row_bytes = width.div_ceil(8);
    for row in bits.chunks(width) {
        let mut packed = vec![0u8; row_bytes];
        for (j, &open) in row.iter().enumerate() {
            if !open {
                packed[j / 8] |= 0x80 >> (j % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    Ok(out)
}

pub fn decode_pbm(bytes: &[u8]) -> Result<(usize, usize, Vec<bool>)> {
    let (fields, offset) = header_fields(bytes, "P4", 2)?;
    let (w, h) = (fields[0], fields[1]);
    let row_bytes = w.div_ceil(8);
    let body = &bytes[offset..];
    if body.len() < row_bytes * h {
        return Err(Error::Parse("truncated PBM body".into()));
    }
    let mut bits = Vec::with_capacity(w * h);
    for row in body.chunks(row_bytes).take(h) {
        for j in 0..w {
            bits.push(row[j / 8] & (0x80 >> (j % 8)) == 0);
        }
    }
    Ok((w, h, bits))
}

fn header_fields(bytes: &[u8], magic: &str, count: usize) -> Result<(Vec<usize>, usize)> {
    if !bytes.starts_with(magic.as_bytes()) {
        return Err(Error::Parse(format!("expected {magic} magic")));
    }
    let mut pos = magic.len();
    let mut fields = Vec::with_capacity(count);
    while fields.len() < count {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).map_err(|e| Error::Parse(e.to_string()))?;
        fields.push(text.parse().map_err(|_| Error::Parse(format!("bad header field {text:?}")))?);
    }
    // exactly one whitespace byte separates header and raster
    Ok((fields, pos + 1))
}

/// Write rows of numbers as CSV under a header line.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{}", header.join(",")).expect("write to Vec");
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        writeln!(out, "{}", line.join(",")).expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Shortest round-tripping text for finite values, `inf`/`nan` otherwise.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_both_depths() {
        let values = [0.0, 0.5, 1.0, 0.25, 2.0, 1.5];
        for bits in [8, 16] {
            let bytes = encode_pgm(3, 2, &values, bits).unwrap();
            let (w, h, maxval, s) = decode_pgm(&bytes).unwrap();
            assert_eq!((w, h), (3, 2));
            assert_eq!(s[4], maxval);
            assert_eq!(s[0], 0);
            assert_eq!(s[2], (maxval as f64 / 2.0).round() as u32);
        }
        assert!(encode_pgm(3, 2, &values, 12).is_err());
    }

    #[test]
    fn pbm_round_trip_with_padding() {
        let bits: Vec<bool> = (0..33).map(|i| i % 3 == 0).collect();
        let bytes = encode_pbm(11, 3, &bits).unwrap();
        assert_eq!(bytes.len(), "P4\n11 3\n".len() + 2 * 3);
        let (w, h, back) = decode_pbm(&bytes).unwrap();
        assert_eq!((w, h), (11, 3));
        assert_eq!(back, bits);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [1.0 / 3.0, -2.5e-17, 0.0, 6.02e23] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(f64::INFINITY), "inf");
    }
}
