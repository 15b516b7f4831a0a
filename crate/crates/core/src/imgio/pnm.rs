//! Minimal Netpbm codec for the grayscale (PGM) and color (PPM) variants.
//!
//! Both the plain (P2/P3) and raw (P5/P6) encodings are read. Raw samples are
//! one byte when maxval < 256 and two big-endian bytes otherwise.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// P2
    PlainGray,
    /// P3
    PlainColor,
    /// P5
    RawGray,
    /// P6
    RawColor,
}

impl Kind {
    fn from_magic(magic: &[u8]) -> Result<Kind> {
        match magic {
            b"P2" => Ok(Kind::PlainGray),
            b"P3" => Ok(Kind::PlainColor),
            b"P5" => Ok(Kind::RawGray),
            b"P6" => Ok(Kind::RawColor),
            other => Err(Error::MalformedHeader(format!(
                "unsupported magic number {:?}",
                String::from_utf8_lossy(other)
            ))),
        }
    }

    pub fn channels(self) -> usize {
        match self {
            Kind::PlainGray | Kind::RawGray => 1,
            Kind::PlainColor | Kind::RawColor => 3,
        }
    }

    fn is_plain(self) -> bool {
        matches!(self, Kind::PlainGray | Kind::PlainColor)
    }
}

/// Decoded samples exactly as stored in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pnm {
    pub kind: Kind,
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    /// Interleaved, row-major, `width * height * channels` entries.
    pub samples: Vec<u16>,
}

impl Pnm {
    pub fn channels(&self) -> usize {
        self.kind.channels()
    }
}

pub fn read(path: &Path) -> Result<Pnm> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let c = self.data[self.pos];
            if c == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<u32> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                Error::MalformedHeader(format!(
                    "{what} is not a number: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

pub fn decode(data: &[u8]) -> Result<Pnm> {
    if data.len() < 2 {
        return Err(Error::MalformedHeader("file too short".into()));
    }
    let kind = Kind::from_magic(&data[..2])?;
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "degenerate dimensions {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(kind.channels()))
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;

    let mut samples = Vec::with_capacity(count);
    if kind.is_plain() {
        for k in 0..count {
            let tok = cur.token().ok_or_else(|| {
                Error::MalformedData(format!("expected {count} samples, found {k}"))
            })?;
            let v = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| {
                    Error::MalformedData(format!(
                        "sample {k} is not a number: {:?}",
                        String::from_utf8_lossy(tok)
                    ))
                })?;
            if v > maxval {
                return Err(Error::MalformedData(format!(
                    "sample {k} = {v} exceeds maxval {maxval}"
                )));
            }
            samples.push(v as u16);
        }
    } else {
        // exactly one whitespace byte separates maxval from the raster
        match data.get(cur.pos) {
            Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::MalformedHeader("missing raster separator".into())),
        }
        let raster = &data[cur.pos..];
        let wide = maxval > 255;
        let need = if wide { count * 2 } else { count };
        if raster.len() < need {
            return Err(Error::MalformedData(format!(
                "expected {need} raster bytes, found {}",
                raster.len()
            )));
        }
        if wide {
            samples.extend(
                raster[..need]
                    .chunks_exact(2)
                    .map(|b| u16::from_be_bytes([b[0], b[1]])),
            );
        } else {
            samples.extend(raster[..need].iter().map(|&b| b as u16));
        }
        if let Some((k, v)) = samples
            .iter()
            .enumerate()
            .find(|(_, &v)| u32::from(v) > maxval)
        {
            return Err(Error::MalformedData(format!(
                "sample {k} = {v} exceeds maxval {maxval}"
            )));
        }
    }

    Ok(Pnm {
        kind,
        width,
        height,
        maxval,
        samples,
    })
}

/// Encodes as raw P5/P6 (plain kinds are promoted to their raw counterpart).
pub fn encode(pnm: &Pnm) -> Vec<u8> {
    let magic = match pnm.kind.channels() {
        1 => "P5",
        _ => "P6",
    };
    let mut out = format!("{magic}\n{} {}\n{}\n", pnm.width, pnm.height, pnm.maxval).into_bytes();
    if pnm.maxval > 255 {
        out.reserve(pnm.samples.len() * 2);
        for &s in &pnm.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(pnm.samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn write(pnm: &Pnm, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode(pnm)).map_err(|e| Error::io(path, e))
}
