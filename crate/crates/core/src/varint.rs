//! LEB128 varints and zig-zag mapping used by the frame layout.

use crate::error::{Error, Result};

#[inline]
pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

#[inline]
pub fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

pub fn put_uvarint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub fn put_ivarint(out: &mut Vec<u8>, v: i64) {
    put_uvarint(out, zigzag(v));
}

/// Cursor over a byte slice with bounds-checked little-endian reads.
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn is_at_end(&self) -> bool {
        self.pos == self.data.len()
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Decode(format!(
                "need {n} bytes at offset {}, only {} left",
                self.pos,
                self.remaining()
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    /// Signed 24-bit little-endian integer.
    pub fn i24(&mut self) -> Result<i32> {
        let b = self.bytes(3)?;
        let v = (b[0] as i32) | ((b[1] as i32) << 8) | ((b[2] as i32) << 16);
        Ok((v << 8) >> 8)
    }

    pub fn uvarint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        let mut shift = 0;
        loop {
            let b = self.u8()?;
            if shift == 63 && b > 1 {
                return Err(Error::Decode("varint overflows 64 bits".into()));
            }
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
            if shift > 63 {
                return Err(Error::Decode("varint too long".into()));
            }
        }
    }

    pub fn ivarint(&mut self) -> Result<i64> {
        Ok(unzigzag(self.uvarint()?))
    }
}

pub fn put_i24(out: &mut Vec<u8>, v: i32) {
    debug_assert!((-(1 << 23)..(1 << 23)).contains(&v));
    out.extend_from_slice(&v.to_le_bytes()[..3]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn ivarint_round_trip(values in proptest::collection::vec(any::<i64>(), 0..64)) {
            let mut buf = Vec::new();
            for v in &values {
                put_ivarint(&mut buf, *v);
            }
            let mut r = Reader::new(&buf);
            for v in &values {
                prop_assert_eq!(r.ivarint().unwrap(), *v);
            }
            prop_assert!(r.is_at_end());
        }

        #[test]
        fn i24_round_trip(v in -(1i32 << 23)..(1i32 << 23)) {
            let mut buf = Vec::new();
            put_i24(&mut buf, v);
            prop_assert_eq!(Reader::new(&buf).i24().unwrap(), v);
        }
    }

    #[test]
    fn small_magnitudes_are_one_byte() {
        for v in -64..64 {
            let mut buf = Vec::new();
            put_ivarint(&mut buf, v);
            assert_eq!(buf.len(), 1);
        }
        assert!(Reader::new(&[0x80]).uvarint().is_err());
    }
}
