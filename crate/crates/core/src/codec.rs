//! Canonical byte encoding shared by hashes, proofs and the transcript.
//!
//! Every protocol type serializes with a fixed field order; integers are
//! big-endian, variable-length data is length-prefixed (u32), and big
//! integers are minimal big-endian byte strings. The same bytes feed the
//! Fiat-Shamir hashes, the bulletin-board entry hashes and the transcript
//! file, so two implementations that agree on these rules agree on every
//! derived value.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of input at offset {0}")]
    UnexpectedEnd(usize),
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
}

/// Canonical serialization. Implementations must be deterministic and
/// injective over the type's valid values.
pub trait Canon: Sized {
    fn encode_into(&self, out: &mut Vec<u8>);
    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError>;

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    fn decode_all(buf: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(buf);
        let v = Self::decode(&mut r)?;
        r.finish()?;
        Ok(v)
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() - self.pos < n {
            return Err(CodecError::UnexpectedEnd(self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, CodecError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_be_bytes(a))
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    pub fn finish(&self) -> Result<(), CodecError> {
        if self.pos != self.buf.len() {
            return Err(CodecError::TrailingBytes(self.buf.len() - self.pos));
        }
        Ok(())
    }
}

pub fn put_u8(out: &mut Vec<u8>, v: u8) {
    out.push(v);
}

pub fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_bytes(out: &mut Vec<u8>, v: &[u8]) {
    put_u32(out, v.len() as u32);
    out.extend_from_slice(v);
}

pub fn put_str(out: &mut Vec<u8>, v: &str) {
    put_bytes(out, v.as_bytes());
}

pub fn read_str(r: &mut Reader<'_>) -> Result<String, CodecError> {
    String::from_utf8(r.bytes()?).map_err(|_| CodecError::Malformed("invalid utf-8"))
}

impl Canon for BigUint {
    fn encode_into(&self, out: &mut Vec<u8>) {
        // to_bytes_be of zero is [0]; normalize to the empty string so the
        // encoding of each value is unique
        if num_traits::Zero::is_zero(self) {
            put_bytes(out, &[]);
        } else {
            put_bytes(out, &self.to_bytes_be());
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let b = r.bytes()?;
        if !b.is_empty() && b[0] == 0 {
            return Err(CodecError::Malformed("big integer has leading zero"));
        }
        Ok(BigUint::from_bytes_be(&b))
    }
}

impl Canon for Vec<u8> {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, self);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.bytes()
    }
}

impl Canon for u64 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_u64(out, *self);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        r.u64()
    }
}

impl<T: Canon> Canon for Vec<T> {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_u32(out, self.len() as u32);
        for x in self {
            x.encode_into(out);
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let n = r.u32()? as usize;
        // cap pre-allocation; large counts still decode, element reads bound them
        let mut v = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            v.push(T::decode(r)?);
        }
        Ok(v)
    }
}

impl<A: Canon, B: Canon> Canon for (A, B) {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
        self.1.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok((A::decode(r)?, B::decode(r)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biguint_round_trip() {
        for v in [0u64, 1, 255, 256, u64::MAX] {
            let x = BigUint::from(v);
            assert_eq!(BigUint::decode_all(&x.encode()).unwrap(), x);
        }
    }

    #[test]
    fn rejects_leading_zero_bigint() {
        let mut buf = Vec::new();
        put_bytes(&mut buf, &[0, 5]);
        assert!(BigUint::decode_all(&buf).is_err());
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut buf = BigUint::from(7u8).encode();
        buf.push(0);
        assert_eq!(BigUint::decode_all(&buf), Err(CodecError::TrailingBytes(1)));
    }
}
