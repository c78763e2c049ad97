//! Canonical byte encoding used for hashing, signing, storage and the wire.
//!
//! Every value is written as a sequence of fields in declared order. A field
//! is either an integer, written as 8 bytes big-endian, or a byte string,
//! written as a 4-byte big-endian length prefix followed by its content.
//! Nested structures are written as byte-string fields holding their own
//! encoding; absent optional values are empty byte strings. Lists are an
//! integer count followed by their items.
//!
//! Decoding is strict: trailing bytes, out-of-range tags, non-canonical
//! booleans and invalid UTF-8 are all rejected, so every accepted byte
//! string maps to exactly one value.

use crate::crypto::{PublicKey, Signature, PUBLIC_KEY_LEN, SIGNATURE_LEN};
use crate::hash::{Address, Hash32, ADDRESS_LEN, HASH_LEN};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodingError {
    #[error("required field `{0}` is not set")]
    MissingField(&'static str),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("field `{field}` has length {got}, expected {expected}")]
    BadLength {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid tag {tag} for `{field}`")]
    BadTag { field: &'static str, tag: u64 },
    #[error("field `{0}` is not valid UTF-8")]
    BadUtf8(&'static str),
    #[error("field `{0}` exceeds the encodable length")]
    TooLong(&'static str),
}

/// Byte sink for the canonical encoding.
#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn put_i64(&mut self, v: i64) -> &mut Self {
        self.put_u64(v as u64)
    }

    pub fn put_bool(&mut self, v: bool) -> &mut Self {
        self.put_u64(v as u64)
    }

    /// # Panics
    ///
    /// Panics if `bytes` is longer than `u32::MAX`; nothing that reaches an
    /// encoder is allowed to be that large.
    pub fn put_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        let len = u32::try_from(bytes.len()).expect("field longer than u32::MAX");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn put_str(&mut self, s: &str) -> &mut Self {
        self.put_bytes(s.as_bytes())
    }

    pub fn put_nested<T: Encode + ?Sized>(&mut self, value: &T) -> &mut Self {
        let inner = value.encode_to_vec();
        self.put_bytes(&inner)
    }

    pub fn put_opt_nested<T: Encode>(&mut self, value: Option<&T>) -> &mut Self {
        match value {
            Some(v) => self.put_nested(v),
            None => self.put_bytes(&[]),
        }
    }

    pub fn put_list<T: Encode>(&mut self, items: &[T]) -> &mut Self {
        self.put_u64(items.len() as u64);
        for item in items {
            self.put_nested(item);
        }
        self
    }

    pub fn put_address(&mut self, a: &Address) -> &mut Self {
        self.put_bytes(&a.0)
    }

    pub fn put_opt_address(&mut self, a: Option<&Address>) -> &mut Self {
        match a {
            Some(a) => self.put_bytes(&a.0),
            None => self.put_bytes(&[]),
        }
    }

    pub fn put_hash(&mut self, h: &Hash32) -> &mut Self {
        self.put_bytes(&h.0)
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor over canonical bytes.
#[derive(Debug)]
pub struct Decoder<'a> {
    input: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Decoder { input }
    }

    pub fn remaining(&self) -> usize {
        self.input.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], EncodingError> {
        if self.input.len() < n {
            return Err(EncodingError::UnexpectedEnd);
        }
        let (head, tail) = self.input.split_at(n);
        self.input = tail;
        Ok(head)
    }

    pub fn get_u64(&mut self) -> Result<u64, EncodingError> {
        let raw = self.take(8)?;
        Ok(u64::from_be_bytes(raw.try_into().expect("8 bytes")))
    }

    pub fn get_i64(&mut self) -> Result<i64, EncodingError> {
        self.get_u64().map(|v| v as i64)
    }

    pub fn get_bool(&mut self, field: &'static str) -> Result<bool, EncodingError> {
        match self.get_u64()? {
            0 => Ok(false),
            1 => Ok(true),
            tag => Err(EncodingError::BadTag { field, tag }),
        }
    }

    pub fn get_bytes(&mut self) -> Result<&'a [u8], EncodingError> {
        let raw = self.take(4)?;
        let len = u32::from_be_bytes(raw.try_into().expect("4 bytes")) as usize;
        self.take(len)
    }

    pub fn get_str(&mut self, field: &'static str) -> Result<String, EncodingError> {
        let raw = self.get_bytes()?;
        std::str::from_utf8(raw)
            .map(str::to_owned)
            .map_err(|_| EncodingError::BadUtf8(field))
    }

    pub fn get_fixed<const N: usize>(
        &mut self,
        field: &'static str,
    ) -> Result<[u8; N], EncodingError> {
        let raw = self.get_bytes()?;
        raw.try_into().map_err(|_| EncodingError::BadLength {
            field,
            expected: N,
            got: raw.len(),
        })
    }

    pub fn get_address(&mut self, field: &'static str) -> Result<Address, EncodingError> {
        self.get_fixed::<ADDRESS_LEN>(field).map(Address)
    }

    pub fn get_opt_address(
        &mut self,
        field: &'static str,
    ) -> Result<Option<Address>, EncodingError> {
        let raw = self.get_bytes()?;
        match raw.len() {
            0 => Ok(None),
            ADDRESS_LEN => Ok(Some(Address(raw.try_into().expect("length checked")))),
            got => Err(EncodingError::BadLength {
                field,
                expected: ADDRESS_LEN,
                got,
            }),
        }
    }

    pub fn get_hash(&mut self, field: &'static str) -> Result<Hash32, EncodingError> {
        self.get_fixed::<HASH_LEN>(field).map(Hash32)
    }

    pub fn get_public_key(&mut self, field: &'static str) -> Result<PublicKey, EncodingError> {
        self.get_fixed::<PUBLIC_KEY_LEN>(field).map(PublicKey)
    }

    pub fn get_signature(&mut self, field: &'static str) -> Result<Signature, EncodingError> {
        self.get_fixed::<SIGNATURE_LEN>(field).map(Signature)
    }

    pub fn get_nested<T: Decode>(&mut self) -> Result<T, EncodingError> {
        let raw = self.get_bytes()?;
        T::decode_exact(raw)
    }

    pub fn get_opt_nested<T: Decode>(&mut self) -> Result<Option<T>, EncodingError> {
        let raw = self.get_bytes()?;
        if raw.is_empty() {
            Ok(None)
        } else {
            T::decode_exact(raw).map(Some)
        }
    }

    pub fn get_list<T: Decode>(&mut self) -> Result<Vec<T>, EncodingError> {
        let count = self.get_u64()?;
        // Each item costs at least its 4-byte length prefix.
        if count > (self.remaining() / 4) as u64 {
            return Err(EncodingError::UnexpectedEnd);
        }
        (0..count).map(|_| self.get_nested()).collect()
    }

    pub fn finish(self) -> Result<(), EncodingError> {
        if self.input.is_empty() {
            Ok(())
        } else {
            Err(EncodingError::TrailingBytes(self.input.len()))
        }
    }
}

/// Types with a canonical byte encoding.
pub trait Encode {
    fn encode(&self, enc: &mut Encoder);

    fn encode_to_vec(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.finish()
    }

    fn encoded_len(&self) -> usize {
        self.encode_to_vec().len()
    }
}

/// Types that can be read back from their canonical encoding.
pub trait Decode: Sized {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError>;

    /// Decodes `bytes`, requiring that the whole input is consumed.
    fn decode_exact(bytes: &[u8]) -> Result<Self, EncodingError> {
        let mut dec = Decoder::new(bytes);
        let value = Self::decode(&mut dec)?;
        dec.finish()?;
        Ok(value)
    }
}

impl Encode for [u8] {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_bytes(self);
    }
}

impl Encode for Vec<u8> {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_bytes(self);
    }
}

impl Decode for Vec<u8> {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        dec.get_bytes().map(<[u8]>::to_vec)
    }
}

impl Encode for Address {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(self);
    }
}

impl Decode for Address {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        dec.get_address("address")
    }
}

impl Encode for Hash32 {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_hash(self);
    }
}

impl Decode for Hash32 {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        dec.get_hash("hash")
    }
}

/// Canonical encoding of any encodable value.
pub fn canonical_encode<T: Encode + ?Sized>(value: &T) -> Vec<u8> {
    value.encode_to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bytes_is_zero_prefix() {
        let mut enc = Encoder::new();
        enc.put_bytes(&[]);
        assert_eq!(enc.finish(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn integers_are_eight_bytes_big_endian() {
        let mut enc = Encoder::new();
        enc.put_u64(0x0102);
        assert_eq!(enc.finish(), vec![0, 0, 0, 0, 0, 0, 1, 2]);
    }

    #[test]
    fn trailing_bytes_rejected() {
        let bytes = vec![0, 0, 0, 1, 9, 0];
        assert_eq!(
            Vec::<u8>::decode_exact(&bytes),
            Err(EncodingError::TrailingBytes(1))
        );
    }

    #[test]
    fn truncated_input_rejected() {
        assert_eq!(
            Vec::<u8>::decode_exact(&[0, 0, 0, 5, 1]),
            Err(EncodingError::UnexpectedEnd)
        );
    }

    #[test]
    fn non_canonical_bool_rejected() {
        let mut enc = Encoder::new();
        enc.put_u64(2);
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        assert!(matches!(
            dec.get_bool("flag"),
            Err(EncodingError::BadTag { tag: 2, .. })
        ));
    }

    #[test]
    fn absurd_list_count_rejected() {
        let mut enc = Encoder::new();
        enc.put_u64(u64::MAX);
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        assert!(dec.get_list::<Vec<u8>>().is_err());
    }

    #[test]
    fn optional_address_lengths() {
        let mut enc = Encoder::new();
        enc.put_opt_address(None)
            .put_opt_address(Some(&Address([4; 20])));
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        assert_eq!(dec.get_opt_address("a").unwrap(), None);
        assert_eq!(dec.get_opt_address("b").unwrap(), Some(Address([4; 20])));
        dec.finish().unwrap();

        let bad = [0, 0, 0, 3, 1, 2, 3];
        assert!(Decoder::new(&bad).get_opt_address("c").is_err());
    }
}
