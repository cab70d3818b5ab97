//! Bit-sequence file formats.
//!
//! Text: one ASCII `0`/`1` per bit, each record terminated by a newline.
//! Packed: 16-byte header (`CRND`, version byte, three reserved zero bytes,
//! bit length as little-endian `u64`) followed by MSB-first bytes.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::BitSequence;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CRND";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Packed,
}

pub fn write_text<W: Write>(mut w: W, records: &[BitSequence]) -> Result<()> {
    for r in records {
        w.write_all(r.to_string().as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses newline-separated records; blank lines are ignored.
pub fn read_text<R: Read>(mut r: R) -> Result<Vec<BitSequence>> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    s.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse())
        .collect()
}

pub fn pack(x: &BitSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + x.len().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&[0, 0, 0]);
    out.extend_from_slice(&(x.len() as u64).to_le_bytes());
    for chunk in x.as_slice().chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= b << (7 - i);
        }
        out.push(byte);
    }
    out
}

pub fn unpack(data: &[u8]) -> Result<BitSequence> {
    if data.len() < HEADER_LEN || &data[..4] != MAGIC {
        return Err(Error::Format("missing CRND header".into()));
    }
    if data[4] != VERSION {
        return Err(Error::Format(format!("unsupported packed version {}", data[4])));
    }
    let len = u64::from_le_bytes(data[8..16].try_into().expect("8-byte slice"));
    let len = usize::try_from(len).map_err(|_| Error::Format("bit length overflows".into()))?;
    let body = &data[HEADER_LEN..];
    if body.len() != len.div_ceil(8) {
        return Err(Error::Format(format!(
            "header says {len} bits but body has {} bytes",
            body.len()
        )));
    }
    let bits = (0..len).map(|i| (body[i / 8] >> (7 - i % 8)) & 1).collect();
    BitSequence::from_bits(bits)
}

pub fn detect(data: &[u8]) -> Format {
    if data.len() >= 4 && &data[..4] == MAGIC {
        Format::Packed
    } else {
        Format::Text
    }
}

/// Reads every record in a file, auto-detecting the format.
pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<BitSequence>> {
    let data = fs::read(path)?;
    match detect(&data) {
        Format::Packed => Ok(vec![unpack(&data)?]),
        Format::Text => read_text(&data[..]),
    }
}

/// Concatenation of every record in a file.
pub fn read_concatenated(path: impl AsRef<Path>) -> Result<BitSequence> {
    let mut all = BitSequence::new();
    for r in read_file(path)? {
        all.extend_from(&r);
    }
    Ok(all)
}

pub fn write_file(path: impl AsRef<Path>, records: &[BitSequence], format: Format) -> Result<()> {
    let bytes = encode(records, format)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode(records: &[BitSequence], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Text => {
            let mut buf = Vec::new();
            write_text(&mut buf, records)?;
            Ok(buf)
        }
        Format::Packed => match records {
            [one] => Ok(pack(one)),
            _ => Err(Error::Format(format!(
                "packed form holds one sequence, got {}",
                records.len()
            ))),
        },
    }
}
