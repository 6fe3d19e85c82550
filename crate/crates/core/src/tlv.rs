//! Canonical tag-length-value codec used for every signed payload.
//!
//! A value is encoded as a one-byte type tag, a definite length and the
//! concatenation of its fields. Each field is itself a TLV whose tag is
//! `0x80 | index`, emitted in ascending index order. Absent optional fields
//! are simply omitted. Lengths use the shortest form:
//!
//! | content length      | length bytes        |
//! |---------------------|---------------------|
//! | `0..=0x7F`          | `LL`                |
//! | `0x80..=0xFF`       | `81 LL`             |
//! | `0x100..=0xFFFF`    | `82 LL LL`          |
//! | `0x10000..=1 MiB`   | `83 LL LL LL`       |
//!
//! Any other length form is rejected, which keeps the encoding canonical:
//! a value has exactly one byte representation.

use thiserror::Error;

/// Upper bound on any decoded input.
pub const MAX_INPUT: usize = 1 << 20;

/// Tag bit marking a field (context) tag.
pub const FIELD_TAG: u8 = 0x80;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed TLV: input truncated")]
    Truncated,
    #[error("malformed TLV: {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("malformed TLV: expected tag {expected:#04x}, found {found:#04x}")]
    UnexpectedTag { expected: u8, found: u8 },
    #[error("malformed TLV: missing mandatory field {0}")]
    MissingField(u8),
    #[error("malformed TLV: unknown or out-of-order tag {0:#04x}")]
    UnknownTag(u8),
    #[error("malformed TLV: non-canonical length")]
    NonCanonicalLength,
    #[error("malformed TLV: invalid value for {0}")]
    InvalidValue(&'static str),
    #[error("length overflow")]
    LengthOverflow,
    #[error("invalid JSON body: {0}")]
    Json(String),
}

impl CodecError {
    /// Everything except [`CodecError::LengthOverflow`] is a malformed-input error.
    pub fn is_malformed(&self) -> bool {
        !matches!(self, CodecError::LengthOverflow)
    }
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// A type with a fixed TLV tag and an ordered field layout.
pub trait TlvCodec: Sized {
    const TAG: u8;

    fn write_fields(&self, w: &mut TlvWriter);

    fn read_fields(f: &mut Fields<'_>) -> Result<Self>;

    fn to_tlv(&self) -> Vec<u8> {
        encode_tlv(self)
    }

    fn from_tlv(bytes: &[u8]) -> Result<Self> {
        decode_tlv(bytes)
    }
}

/// A value that can sit inside a field.
pub trait FieldValue: Sized {
    fn put(&self, out: &mut Vec<u8>);
    fn get(bytes: &[u8]) -> Result<Self>;
}

pub fn encode_tlv<T: TlvCodec>(value: &T) -> Vec<u8> {
    let mut w = TlvWriter::default();
    value.write_fields(&mut w);
    w.into_tlv(T::TAG)
}

pub fn decode_tlv<T: TlvCodec>(bytes: &[u8]) -> Result<T> {
    if bytes.len() > MAX_INPUT {
        return Err(CodecError::LengthOverflow);
    }
    let mut r = TlvReader::new(bytes);
    let (tag, content) = r.read()?;
    if tag != T::TAG {
        return Err(CodecError::UnexpectedTag {
            expected: T::TAG,
            found: tag,
        });
    }
    if !r.is_empty() {
        return Err(CodecError::TrailingBytes(r.remaining()));
    }
    decode_content(content)
}

/// Splits one complete TLV of any tag into its tag and content.
pub fn split_tlv(bytes: &[u8]) -> Result<(u8, &[u8])> {
    if bytes.len() > MAX_INPUT {
        return Err(CodecError::LengthOverflow);
    }
    let mut r = TlvReader::new(bytes);
    let (tag, content) = r.read()?;
    if !r.is_empty() {
        return Err(CodecError::TrailingBytes(r.remaining()));
    }
    Ok((tag, content))
}

/// Decodes the fields of `T` from raw content (without the outer tag).
pub fn decode_content<T: TlvCodec>(content: &[u8]) -> Result<T> {
    let mut fields = Fields::new(content);
    let value = T::read_fields(&mut fields)?;
    fields.finish()?;
    Ok(value)
}

pub fn push_tlv(out: &mut Vec<u8>, tag: u8, content: &[u8]) {
    out.push(tag);
    push_len(out, content.len());
    out.extend_from_slice(content);
}

fn push_len(out: &mut Vec<u8>, len: usize) {
    match len {
        0..=0x7F => out.push(len as u8),
        0x80..=0xFF => out.extend_from_slice(&[0x81, len as u8]),
        0x100..=0xFFFF => out.extend_from_slice(&[0x82, (len >> 8) as u8, len as u8]),
        _ => {
            assert!(len <= MAX_INPUT, "TLV content exceeds {MAX_INPUT} bytes");
            out.extend_from_slice(&[0x83, (len >> 16) as u8, (len >> 8) as u8, len as u8])
        }
    }
}

/// Low-level cursor over a sequence of TLVs.
#[derive(Debug, Clone)]
pub struct TlvReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> TlvReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn peek_tag(&self) -> Option<u8> {
        self.buf.get(self.pos).copied()
    }

    pub fn read(&mut self) -> Result<(u8, &'a [u8])> {
        let tag = *self.buf.get(self.pos).ok_or(CodecError::Truncated)?;
        let first = *self.buf.get(self.pos + 1).ok_or(CodecError::Truncated)?;
        let mut cursor = self.pos + 2;
        let len = match first {
            0x00..=0x7F => first as usize,
            0x81..=0x83 => {
                let n = (first & 0x7F) as usize;
                let raw = self
                    .buf
                    .get(cursor..cursor + n)
                    .ok_or(CodecError::Truncated)?;
                cursor += n;
                let len = raw.iter().fold(0usize, |acc, b| (acc << 8) | *b as usize);
                let min = match n {
                    1 => 0x80,
                    2 => 0x100,
                    _ => 0x10000,
                };
                if len < min {
                    return Err(CodecError::NonCanonicalLength);
                }
                if len > MAX_INPUT {
                    return Err(CodecError::LengthOverflow);
                }
                len
            }
            0x80 => return Err(CodecError::NonCanonicalLength),
            _ => return Err(CodecError::LengthOverflow),
        };
        let content = self
            .buf
            .get(cursor..cursor + len)
            .ok_or(CodecError::Truncated)?;
        self.pos = cursor + len;
        Ok((tag, content))
    }
}

/// Builds the field sequence of one value.
#[derive(Debug, Default)]
pub struct TlvWriter {
    buf: Vec<u8>,
    last_index: Option<u8>,
}

impl TlvWriter {
    fn tag(&mut self, index: u8) -> u8 {
        debug_assert!(index < FIELD_TAG);
        debug_assert!(
            self.last_index.map_or(true, |last| index > last),
            "fields must be written in ascending order"
        );
        self.last_index = Some(index);
        FIELD_TAG | index
    }

    pub fn field<V: FieldValue>(&mut self, index: u8, value: &V) {
        let tag = self.tag(index);
        let mut content = Vec::new();
        value.put(&mut content);
        push_tlv(&mut self.buf, tag, &content);
    }

    pub fn opt<V: FieldValue>(&mut self, index: u8, value: &Option<V>) {
        if let Some(v) = value {
            self.field(index, v);
        }
    }

    /// Wraps the written fields under `tag`.
    pub fn into_tlv(self, tag: u8) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.buf.len() + 4);
        push_tlv(&mut out, tag, &self.buf);
        out
    }

    /// A presence-only flag: written as an empty field when `set`.
    pub fn flag(&mut self, index: u8, set: bool) {
        if set {
            let tag = self.tag(index);
            push_tlv(&mut self.buf, tag, &[]);
        }
    }
}

/// Ordered field reader for one value's content.
#[derive(Debug)]
pub struct Fields<'a> {
    reader: TlvReader<'a>,
}

impl<'a> Fields<'a> {
    pub fn new(content: &'a [u8]) -> Self {
        Self {
            reader: TlvReader::new(content),
        }
    }

    fn take(&mut self, index: u8) -> Result<Option<&'a [u8]>> {
        match self.reader.peek_tag() {
            Some(tag) if tag == FIELD_TAG | index => Ok(Some(self.reader.read()?.1)),
            _ => Ok(None),
        }
    }

    pub fn req<V: FieldValue>(&mut self, index: u8) -> Result<V> {
        let raw = self.take(index)?.ok_or(CodecError::MissingField(index))?;
        V::get(raw)
    }

    pub fn opt<V: FieldValue>(&mut self, index: u8) -> Result<Option<V>> {
        self.take(index)?.map(V::get).transpose()
    }

    pub fn flag(&mut self, index: u8) -> Result<bool> {
        match self.take(index)? {
            Some([]) => Ok(true),
            Some(_) => Err(CodecError::InvalidValue("presence flag")),
            None => Ok(false),
        }
    }

    /// Reads a single choice alternative: returns its index and raw content.
    pub fn choice(&mut self) -> Result<(u8, &'a [u8])> {
        let (tag, content) = self.reader.read()?;
        if tag & FIELD_TAG == 0 {
            return Err(CodecError::UnknownTag(tag));
        }
        Ok((tag & !FIELD_TAG, content))
    }

    pub fn finish(self) -> Result<()> {
        match self.reader.peek_tag() {
            None => Ok(()),
            Some(tag) => Err(CodecError::UnknownTag(tag)),
        }
    }
}

macro_rules! uint_field {
    ($($ty:ty),*) => {$(
        impl FieldValue for $ty {
            fn put(&self, out: &mut Vec<u8>) {
                let bytes = self.to_be_bytes();
                let skip = bytes.iter().take_while(|b| **b == 0).count().min(bytes.len() - 1);
                out.extend_from_slice(&bytes[skip..]);
            }

            fn get(bytes: &[u8]) -> Result<Self> {
                const WIDTH: usize = std::mem::size_of::<$ty>();
                if bytes.is_empty() || bytes.len() > WIDTH || (bytes.len() > 1 && bytes[0] == 0) {
                    return Err(CodecError::InvalidValue(stringify!($ty)));
                }
                let mut buf = [0u8; WIDTH];
                buf[WIDTH - bytes.len()..].copy_from_slice(bytes);
                Ok(<$ty>::from_be_bytes(buf))
            }
        }
    )*};
}

uint_field!(u8, u16, u32, u64);

impl FieldValue for bool {
    fn put(&self, out: &mut Vec<u8>) {
        out.push(if *self { 0xFF } else { 0x00 });
    }

    fn get(bytes: &[u8]) -> Result<Self> {
        match bytes {
            [0x00] => Ok(false),
            [0xFF] => Ok(true),
            _ => Err(CodecError::InvalidValue("boolean")),
        }
    }
}

impl FieldValue for String {
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.as_bytes());
    }

    fn get(bytes: &[u8]) -> Result<Self> {
        String::from_utf8(bytes.to_vec()).map_err(|_| CodecError::InvalidValue("utf8 text"))
    }
}

impl FieldValue for Vec<u8> {
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self);
    }

    fn get(bytes: &[u8]) -> Result<Self> {
        Ok(bytes.to_vec())
    }
}

/// An alternative that carries no data.
impl FieldValue for () {
    fn put(&self, _: &mut Vec<u8>) {}

    fn get(bytes: &[u8]) -> Result<Self> {
        if bytes.is_empty() {
            Ok(())
        } else {
            Err(CodecError::InvalidValue("empty alternative"))
        }
    }
}

impl<const N: usize> FieldValue for [u8; N] {
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self);
    }

    fn get(bytes: &[u8]) -> Result<Self> {
        bytes
            .try_into()
            .map_err(|_| CodecError::InvalidValue("fixed-length octets"))
    }
}

impl<T: TlvCodec> FieldValue for T {
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&encode_tlv(self));
    }

    fn get(bytes: &[u8]) -> Result<Self> {
        decode_tlv(bytes)
    }
}

/// Sequence of nested values; each element keeps its own type tag.
impl<T: TlvCodec> FieldValue for Vec<T> {
    fn put(&self, out: &mut Vec<u8>) {
        for item in self {
            out.extend_from_slice(&encode_tlv(item));
        }
    }

    fn get(bytes: &[u8]) -> Result<Self> {
        let mut r = TlvReader::new(bytes);
        let mut items = Vec::new();
        while !r.is_empty() {
            let (tag, content) = r.read()?;
            if tag != T::TAG {
                return Err(CodecError::UnexpectedTag {
                    expected: T::TAG,
                    found: tag,
                });
            }
            items.push(decode_content(content)?);
        }
        Ok(items)
    }
}

/// Generic tree view of TLV bytes, used for human-readable transcript dumps.
pub fn dump(bytes: &[u8]) -> serde_json::Value {
    use serde_json::{json, Value};

    fn node(tag: u8, content: &[u8], depth: usize) -> Value {
        let tag_hex = format!("{tag:02X}");
        if depth < 16 {
            if let Some(children) = parse_all(content, depth + 1) {
                if !children.is_empty() {
                    return json!({ "tag": tag_hex, "children": children });
                }
            }
        }
        json!({ "tag": tag_hex, "value": hex::encode_upper(content) })
    }

    fn parse_all(bytes: &[u8], depth: usize) -> Option<Vec<Value>> {
        let mut r = TlvReader::new(bytes);
        let mut out = Vec::new();
        while !r.is_empty() {
            let (tag, content) = r.read().ok()?;
            out.push(node(tag, content, depth));
        }
        Some(out)
    }

    match parse_all(bytes, 0) {
        Some(mut nodes) if nodes.len() == 1 => nodes.remove(0),
        Some(nodes) if !nodes.is_empty() => Value::Array(nodes),
        _ => json!({ "raw": hex::encode_upper(bytes) }),
    }
}
