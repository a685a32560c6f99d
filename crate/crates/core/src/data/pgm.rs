//! Binary PGM (P5) I/O: 8-bit for intensities, 16-bit big-endian
//! millimeters for depth.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{DepthImage, GrayImage};

/// Decoded P5 raster with its raw sample values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

pub fn decode(bytes: &[u8]) -> Result<Pgm> {
    let mut pos = 0;
    let mut fields = [0usize; 3];
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("missing P5 magic".into()));
    }
    pos += 2;
    for field in fields.iter_mut() {
        // Whitespace and '#' comments may separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("bad PGM header number".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("PGM header not terminated".into()));
    }
    pos += 1;

    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!(
            "unsupported PGM geometry {width}x{height} maxval {maxval}"
        )));
    }
    let n = width * height;
    let body = &bytes[pos..];
    let samples: Vec<u16> = if maxval < 256 {
        if body.len() < n {
            return Err(Error::Format("truncated PGM data".into()));
        }
        body[..n].iter().map(|&b| b as u16).collect()
    } else {
        if body.len() < 2 * n {
            return Err(Error::Format("truncated PGM data".into()));
        }
        body[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

pub fn encode(pgm: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval < 256 {
        out.extend(pgm.samples.iter().map(|&s| s as u8));
    } else {
        for s in &pgm.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

pub fn gray_to_pgm(img: &GrayImage) -> Pgm {
    Pgm {
        width: img.width(),
        height: img.height(),
        maxval: 255,
        samples: img
            .data()
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u16)
            .collect(),
    }
}

pub fn gray_from_pgm(pgm: &Pgm) -> Result<GrayImage> {
    let max = pgm.maxval as f32;
    GrayImage::new(
        pgm.width,
        pgm.height,
        pgm.samples.iter().map(|&s| (s as f32 / max).min(1.0)).collect(),
    )
}

pub fn depth_to_pgm(depth: &DepthImage) -> Pgm {
    Pgm {
        width: depth.width(),
        height: depth.height(),
        maxval: 65535,
        samples: depth
            .data()
            .iter()
            .map(|&d| (d * 1000.0).round().clamp(0.0, 65535.0) as u16)
            .collect(),
    }
}

pub fn depth_from_pgm(pgm: &Pgm) -> Result<DepthImage> {
    DepthImage::new(
        pgm.width,
        pgm.height,
        pgm.samples.iter().map(|&s| s as f64 / 1000.0).collect(),
    )
}

pub fn read(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write(path: &Path, pgm: &Pgm) -> Result<()> {
    fs::write(path, encode(pgm)).map_err(|e| Error::io(path, e))
}

pub fn read_gray(path: &Path) -> Result<GrayImage> {
    gray_from_pgm(&read(path)?)
}

pub fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    write(path, &gray_to_pgm(img))
}

pub fn read_depth(path: &Path) -> Result<DepthImage> {
    depth_from_pgm(&read(path)?)
}

pub fn write_depth(path: &Path, depth: &DepthImage) -> Result<()> {
    write(path, &depth_to_pgm(depth))
}
