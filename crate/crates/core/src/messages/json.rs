//! Serde adapters for the JSON envelope. Binary values travel as standard
//! padded base64; decoding rejects non-canonical input.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

use crate::pki::PublicKeyId;
use crate::tlv::{FieldValue, TlvCodec};

pub fn b64(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

pub fn unb64(text: &str) -> Option<Vec<u8>> {
    let bytes = STANDARD.decode(text).ok()?;
    // The engine tolerates nothing non-canonical already, but re-encoding is
    // a cheap way to be sure a value has one textual form.
    (STANDARD.encode(&bytes) == text).then_some(bytes)
}

fn de_b64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
    let text = <std::borrow::Cow<'de, str>>::deserialize(d)?;
    unb64(&text).ok_or_else(|| D::Error::custom("invalid base64"))
}

/// A nested value as base64 of its TLV encoding.
pub mod tlv {
    use super::*;

    pub fn serialize<T: TlvCodec, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&b64(&v.to_tlv()))
    }

    pub fn deserialize<'de, T: TlvCodec, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let bytes = de_b64(d)?;
        T::from_tlv(&bytes).map_err(D::Error::custom)
    }
}

/// A list of nested values as an array of base64 strings.
pub mod tlv_list {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<T: TlvCodec, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for item in v {
            seq.serialize_element(&b64(&item.to_tlv()))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, T: TlvCodec, D: Deserializer<'de>>(d: D) -> Result<Vec<T>, D::Error> {
        let texts = <Vec<String>>::deserialize(d)?;
        texts
            .iter()
            .map(|t| {
                let bytes = unb64(t).ok_or_else(|| D::Error::custom("invalid base64"))?;
                T::from_tlv(&bytes).map_err(D::Error::custom)
            })
            .collect()
    }
}

/// A plain field value (octets, bit set) as base64 of its raw content.
pub mod content {
    use super::*;

    pub fn serialize<T: FieldValue, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        let mut out = Vec::new();
        v.put(&mut out);
        s.serialize_str(&b64(&out))
    }

    pub fn deserialize<'de, T: FieldValue, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let bytes = de_b64(d)?;
        T::get(&bytes).map_err(D::Error::custom)
    }
}

/// A root key identifier as base64 of its `04 14 <id>` octet string.
pub mod key_id {
    use super::*;

    pub fn serialize<S: Serializer>(v: &PublicKeyId, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&b64(&v.to_octet_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PublicKeyId, D::Error> {
        let bytes = de_b64(d)?;
        PublicKeyId::from_octet_string(&bytes).ok_or_else(|| D::Error::custom("invalid key identifier"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_0x5a_bytes() {
        assert_eq!(b64(&[0x5A; 16]), "WlpaWlpaWlpaWlpaWlpaWg==");
    }

    #[test]
    fn non_canonical_base64_is_rejected() {
        assert_eq!(unb64("WlpaWlpaWlpaWlpaWlpaWg=="), Some(vec![0x5A; 16]));
        assert_eq!(unb64("WlpaWlpaWlpaWlpaWlpaWh=="), None);
        assert_eq!(unb64("WlpaWlpaWlpaWlpaWlpaWg"), None);
        assert_eq!(unb64("Wlpa WlpaWlpaWlpaWlpaWg=="), None);
    }
}
