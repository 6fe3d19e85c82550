//! Protocol messages: signed payloads, ES10b / ES9+ / ESipa requests and
//! responses, the two envelope formats and the activation code grammar.
//!
//! Every message has a canonical TLV form. Messages that cross an HTTP-style
//! interface also have a JSON form in which nested structures are carried as
//! base64 of their TLV, so signed bytes survive re-encoding untouched.

mod activation;
mod auth;
mod bpp;
mod cancel;
mod codes;
mod eim;
mod envelope;
mod es10;
mod es9;
mod esipa;
pub mod json;
mod report;

pub use activation::{ActivationCode, BadActivationCode};
pub use auth::*;
pub use bpp::*;
pub use cancel::*;
pub use codes::*;
pub use eim::*;
pub use envelope::*;
pub use es10::*;
pub use es9::*;
pub use esipa::*;
pub use report::*;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::tlv::{self, CodecError, FieldValue};

pub type Challenge = [u8; 16];

octets! {
    /// Identifies one RSP session. Rendered as 32 uppercase hex digits.
    pub struct TransactionId([u8; 16]);
}

octets! {
    /// eUICC identifier: SHA-256 of the eUICC signing key, first 16 bytes.
    pub struct Eid([u8; 16]);
}

/// Profile identifier, packed BCD with `F` padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iccid(pub [u8; 10]);

macro_rules! hex_serde {
    ($name:ident) => {
        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(&hex::encode_upper(self.0))
            }
        }

        impl std::str::FromStr for $name {
            type Err = CodecError;

            /// Uppercase only, so each value has exactly one textual form.
            fn from_str(s: &str) -> Result<Self, CodecError> {
                if s.bytes().any(|b| b.is_ascii_lowercase()) {
                    return Err(CodecError::InvalidValue(stringify!($name)));
                }
                hex::decode(s)
                    .ok()
                    .and_then(|b| $name::from_slice(&b))
                    .ok_or(CodecError::InvalidValue(stringify!($name)))
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = <std::borrow::Cow<'de, str>>::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_serde!(TransactionId);
hex_serde!(Eid);

impl Eid {
    pub fn of(public_key: &[u8; 32]) -> Self {
        let digest = Sha256::digest(public_key);
        Eid::from_slice(&digest[..16]).expect("16 bytes")
    }
}

impl Iccid {
    /// Packs 18 to 20 decimal digits.
    pub fn from_digits(digits: &str) -> Option<Self> {
        if !(18..=20).contains(&digits.len()) || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut nibbles: Vec<u8> = digits.bytes().map(|b| b - b'0').collect();
        nibbles.resize(20, 0xF);
        let mut out = [0u8; 10];
        for (i, pair) in nibbles.chunks(2).enumerate() {
            out[i] = (pair[0] << 4) | pair[1];
        }
        Some(Iccid(out))
    }

    pub fn digits(&self) -> String {
        self.0
            .iter()
            .flat_map(|b| [b >> 4, b & 0x0F])
            .take_while(|n| *n != 0xF)
            .map(|n| char::from(b'0' + n))
            .collect()
    }

    fn is_well_formed(bytes: &[u8; 10]) -> bool {
        Iccid::from_digits(&Iccid(*bytes).digits()).is_some_and(|i| &i.0 == bytes)
    }
}

impl std::fmt::Display for Iccid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.digits())
    }
}

impl Serialize for Iccid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.digits())
    }
}

impl<'de> Deserialize<'de> for Iccid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Iccid::from_digits(&text).ok_or_else(|| serde::de::Error::custom("ICCID must be 18 to 20 digits"))
    }
}

impl FieldValue for Iccid {
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0);
    }

    fn get(bytes: &[u8]) -> tlv::Result<Self> {
        let raw: [u8; 10] = FieldValue::get(bytes)?;
        if Iccid::is_well_formed(&raw) {
            Ok(Iccid(raw))
        } else {
            Err(CodecError::InvalidValue("ICCID digits"))
        }
    }
}

bitset! {
    /// RSP capability flags of the eUICC and the LPA.
    pub struct RspCapability {
        CRL_STAPLING_V3_SUPPORT = 0x01 => "crlStaplingV3Support",
        EUICC_CI_UPDATE_SUPPORT = 0x02 => "euiccCiUpdateSupport",
        CANCEL_FOR_EMPTY_SPN_PN_SUPPORT = 0x04 => "cancelForEmptySpnPnSupport",
    }
}

bitset! {
    /// Profile policy rules present in profile metadata.
    pub struct Pprs {
        PPR1 = 0x01 => "ppr1",
        PPR2 = 0x02 => "ppr2",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum HashCcError {
    #[error("confirmation code is empty")]
    EmptyCode,
}

/// `SHA-256(SHA-256(code) || transactionId)`.
pub fn compute_hash_cc(confirmation_code: &str, transaction_id: &TransactionId) -> Result<[u8; 32], HashCcError> {
    if confirmation_code.is_empty() {
        return Err(HashCcError::EmptyCode);
    }
    let inner = Sha256::digest(confirmation_code.as_bytes());
    let mut h = Sha256::new();
    h.update(inner);
    h.update(transaction_id.0);
    Ok(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iccid_bcd_roundtrip() {
        let iccid = Iccid::from_digits("8944500102198304826").unwrap();
        assert_eq!(iccid.0[9], 0x6F);
        assert_eq!(iccid.digits(), "8944500102198304826");
        assert!(Iccid::from_digits("12a4500102198304826").is_none());
        assert!(Iccid::from_digits("123").is_none());
        let mut bad = iccid;
        bad.0[0] = 0xA1;
        assert!(Iccid::get(&bad.0).is_err());
        assert_eq!(Iccid::get(&iccid.0), Ok(iccid));
    }

    #[test]
    fn transaction_id_text_is_uppercase_only() {
        let id = TransactionId([0xAB; 16]);
        let text = id.to_string();
        assert_eq!(text, "ABABABABABABABABABABABABABABABAB");
        assert_eq!(text.parse::<TransactionId>().unwrap(), id);
        assert!(text.to_lowercase().parse::<TransactionId>().is_err());
    }

    #[test]
    fn hash_cc_binds_code_and_transaction() {
        let a = TransactionId([0; 16]);
        let b = TransactionId([1; 16]);
        assert_eq!(compute_hash_cc("1234", &a), compute_hash_cc("1234", &a));
        assert_ne!(compute_hash_cc("1234", &a), compute_hash_cc("1234", &b));
        assert_eq!(compute_hash_cc("", &a), Err(HashCcError::EmptyCode));
    }

    #[test]
    fn capability_rejects_unknown_bits() {
        assert!(RspCapability::get(&[0x08]).is_err());
        let all = RspCapability::CRL_STAPLING_V3_SUPPORT
            | RspCapability::EUICC_CI_UPDATE_SUPPORT
            | RspCapability::CANCEL_FOR_EMPTY_SPN_PN_SUPPORT;
        assert_eq!(RspCapability::get(&[0x07]).unwrap(), all);
        assert_eq!(
            serde_json::to_string(&RspCapability::EUICC_CI_UPDATE_SUPPORT).unwrap(),
            r#"["euiccCiUpdateSupport"]"#
        );
    }
}
