//! General-purpose lossless byte compressors ("basic compressors").
//!
//! Every payload starts with the uncompressed length as a varint followed
//! by the backend's own stream; decoding checks both the length and that
//! the whole payload was consumed.

pub mod arithmetic;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::varint::{put_uvarint, Reader};

/// zlib level for the deflate backend. Level 6 is slower than bzip2 on
/// long runs of small residual codes; level 3 costs ~7% in size.
const DEFLATE_LEVEL: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendId {
    /// LZ4 block format.
    LzFast,
    /// zlib-wrapped Deflate, level 6.
    Deflate,
    /// bzip2, 900k blocks.
    Bwt,
    /// In-house adaptive order-0 range coder.
    Arithmetic,
}

impl BackendId {
    pub const ALL: [BackendId; 4] =
        [BackendId::LzFast, BackendId::Deflate, BackendId::Bwt, BackendId::Arithmetic];

    pub fn to_byte(self) -> u8 {
        match self {
            BackendId::LzFast => 0,
            BackendId::Deflate => 1,
            BackendId::Bwt => 2,
            BackendId::Arithmetic => 3,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0 => BackendId::LzFast,
            1 => BackendId::Deflate,
            2 => BackendId::Bwt,
            3 => BackendId::Arithmetic,
            _ => return Err(Error::Decode(format!("unknown backend id {b}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            BackendId::LzFast => "lz4",
            BackendId::Deflate => "deflate",
            BackendId::Bwt => "bzip2",
            BackendId::Arithmetic => "arithmetic",
        }
    }
}

impl fmt::Display for BackendId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lz4" | "lz" | "lz-fast" | "lz_fast" => Ok(BackendId::LzFast),
            "deflate" | "zlib" => Ok(BackendId::Deflate),
            "bzip2" | "bwt" | "bz2" => Ok(BackendId::Bwt),
            "arithmetic" | "ac" => Ok(BackendId::Arithmetic),
            other => Err(Error::Config(format!("unknown backend '{other}'"))),
        }
    }
}

pub fn compress_bytes(backend: BackendId, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() / 2 + 16);
    put_uvarint(&mut out, data.len() as u64);
    match backend {
        BackendId::LzFast => out.extend_from_slice(&lz4_flex::block::compress(data)),
        BackendId::Deflate => {
            let mut enc = flate2::write::ZlibEncoder::new(out, flate2::Compression::new(DEFLATE_LEVEL));
            enc.write_all(data).expect("in-memory write");
            out = enc.finish().expect("in-memory write");
        }
        BackendId::Bwt => {
            let mut enc = bzip2::write::BzEncoder::new(out, bzip2::Compression::best());
            enc.write_all(data).expect("in-memory write");
            out = enc.finish().expect("in-memory write");
        }
        BackendId::Arithmetic => out.extend_from_slice(&arithmetic::encode(data)),
    }
    out
}

pub fn decompress_bytes(backend: BackendId, payload: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader::new(payload);
    let len = r.uvarint()?;
    let body = &payload[r.position()..];
    // no backend expands beyond ~1000x; reject absurd headers before allocating
    if len > (body.len() as u64 + 64).saturating_mul(1 << 16) {
        return Err(Error::Decode(format!("implausible decoded length {len}")));
    }
    let len = len as usize;
    let out = match backend {
        BackendId::LzFast => {
            lz4_flex::block::decompress(body, len).map_err(|e| Error::Decode(format!("lz4: {e}")))?
        }
        BackendId::Deflate => {
            let mut dec = flate2::read::ZlibDecoder::new(body);
            let mut out = Vec::with_capacity(len);
            dec.read_to_end(&mut out).map_err(|e| Error::Decode(format!("deflate: {e}")))?;
            if dec.total_in() as usize != body.len() {
                return Err(Error::Decode("deflate: trailing or missing bytes".into()));
            }
            out
        }
        BackendId::Bwt => {
            let mut dec = bzip2::read::BzDecoder::new(body);
            let mut out = Vec::with_capacity(len);
            dec.read_to_end(&mut out).map_err(|e| Error::Decode(format!("bzip2: {e}")))?;
            if dec.total_in() as usize != body.len() {
                return Err(Error::Decode("bzip2: trailing or missing bytes".into()));
            }
            out
        }
        BackendId::Arithmetic => arithmetic::decode(body, len)?,
    };
    if out.len() != len {
        return Err(Error::Decode(format!("{backend}: decoded {} bytes, expected {len}", out.len())));
    }
    Ok(out)
}
