//! Adaptive order-0 arithmetic coder over bytes.
//!
//! A 32-bit range coder with carry propagation (low kept in 64 bits, the
//! pending 0xFF run tracked by `cache`/`cache_size`) driven by a frequency
//! table that both sides update identically after every symbol.

use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

/// Adaptive byte frequencies. Counts start at one, grow by
/// [`AdaptiveByteModel::INCREMENT`] per occurrence and are halved when the
/// total would exceed [`AdaptiveByteModel::MAX_TOTAL`].
#[derive(Debug, Clone)]
pub struct AdaptiveByteModel {
    freq: [u32; 256],
    total: u32,
}

impl Default for AdaptiveByteModel {
    fn default() -> Self {
        AdaptiveByteModel { freq: [1; 256], total: 256 }
    }
}

impl AdaptiveByteModel {
    pub const INCREMENT: u32 = 32;
    pub const MAX_TOTAL: u32 = 1 << 16;

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn freq(&self, sym: u8) -> u32 {
        self.freq[sym as usize]
    }

    fn cum(&self, sym: u8) -> u32 {
        self.freq[..sym as usize].iter().sum()
    }

    /// Symbol whose cumulative interval contains `target`, with its
    /// `(cum, freq)`.
    fn find(&self, target: u32) -> (u8, u32, u32) {
        let mut cum = 0;
        for (s, &f) in self.freq.iter().enumerate() {
            if target < cum + f {
                return (s as u8, cum, f);
            }
            cum += f;
        }
        unreachable!("target {target} beyond total {}", self.total)
    }

    pub fn update(&mut self, sym: u8) {
        self.freq[sym as usize] += Self::INCREMENT;
        self.total += Self::INCREMENT;
        if self.total > Self::MAX_TOTAL {
            self.total = 0;
            for f in &mut self.freq {
                *f = f.div_ceil(2);
                self.total += *f;
            }
        }
    }
}

struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    fn new(capacity: usize) -> Self {
        RangeEncoder { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::with_capacity(capacity) }
    }

    fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        let r = self.range / total;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || self.low >= 1 << 32 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
}

impl<'a> RangeDecoder<'a> {
    fn new(data: &'a [u8]) -> Result<Self> {
        let mut d = RangeDecoder { data, pos: 0, code: 0, range: u32::MAX };
        for _ in 0..5 {
            d.code = (d.code << 8) | d.next()? as u32;
        }
        Ok(d)
    }

    fn next(&mut self) -> Result<u8> {
        let b =
            *self.data.get(self.pos).ok_or_else(|| Error::Decode("arithmetic stream truncated".into()))?;
        self.pos += 1;
        Ok(b)
    }

    fn decode(&mut self, model: &AdaptiveByteModel) -> Result<u8> {
        let total = model.total();
        let r = self.range / total;
        let target = (self.code / r).min(total - 1);
        let (sym, cum, freq) = model.find(target);
        self.code = self.code.wrapping_sub(r * cum);
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next()? as u32;
        }
        Ok(sym)
    }
}

/// Encode `data`; the output does not record its own length.
pub fn encode(data: &[u8]) -> Vec<u8> {
    let mut model = AdaptiveByteModel::default();
    let mut enc = RangeEncoder::new(data.len() / 2 + 16);
    for &b in data {
        enc.encode(model.cum(b), model.freq(b), model.total());
        model.update(b);
    }
    enc.finish()
}

/// Decode exactly `len` symbols; every input byte must be consumed.
pub fn decode(stream: &[u8], len: usize) -> Result<Vec<u8>> {
    let mut model = AdaptiveByteModel::default();
    let mut dec = RangeDecoder::new(stream)?;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let b = dec.decode(&model)?;
        model.update(b);
        out.push(b);
    }
    if dec.pos != stream.len() {
        return Err(Error::Decode(format!(
            "{} trailing bytes after arithmetic stream",
            stream.len() - dec.pos
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_single() {
        assert_eq!(decode(&encode(&[]), 0).unwrap(), Vec::<u8>::new());
        assert_eq!(decode(&encode(&[42]), 1).unwrap(), vec![42]);
    }

    #[test]
    fn constant_stream_is_tiny() {
        let data = vec![7u8; 10_000];
        let enc = encode(&data);
        assert!(enc.len() <= 100, "{} bytes", enc.len());
        assert_eq!(decode(&enc, data.len()).unwrap(), data);
    }

    #[test]
    fn carry_heavy_stream() {
        // long runs of the most probable symbol interleaved with rare ones
        // push low toward 0xFF.. boundaries
        let mut data = Vec::new();
        for i in 0..50_000u32 {
            data.push(if i % 997 == 0 {
                255
            } else if i % 13 == 0 {
                1
            } else {
                0
            });
        }
        assert_eq!(decode(&encode(&data), data.len()).unwrap(), data);
    }

    #[test]
    fn truncation_is_detected() {
        let data: Vec<u8> = (0..2000u32).map(|i| (i * 31 % 251) as u8).collect();
        let enc = encode(&data);
        assert!(decode(&enc[..enc.len() - 1], data.len()).is_err());
        let mut longer = enc.clone();
        longer.push(0);
        assert!(decode(&longer, data.len()).is_err());
    }
}
