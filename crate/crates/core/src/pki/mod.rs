//! Miniature PKI: signing keys, certificates, CRLs and chain validation.
//!
//! Every actor's signing credential chains back to a CI root. Certificates are
//! compact TLV structures rather than X.509, carrying exactly the fields the
//! provisioning checks read: roles, key identifiers, validity window, the
//! SM-DP+ OID and whether a CRL distribution point applies.

mod cert;
mod crl;
mod fixture;
mod store;

pub use cert::{issue_certificate, may_issue, Certificate, CertificateTemplate, Role};
pub use crl::{issue_crl, Crl};
pub use fixture::{derive_key_seed, Credential, PkiFixture};
pub use store::{validate_chain, ChainFailure, ChainStatus, CrlDirectory, InvalidReason, TrustStore};

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::tlv::{self, CodecError, FieldValue};

pub type Signature = [u8; 64];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PkiError {
    #[error("role violation: {issuer:?} may not issue {subject:?}")]
    RoleViolation { issuer: Option<Role>, subject: Role },
    #[error("certificate validity window is empty")]
    InvalidValidity,
    #[error("{0:?} certificates must carry an OID")]
    MissingOid(Role),
    #[error("issuer key pair does not match the issuer certificate")]
    IssuerKeyMismatch,
    #[error("unknown issuer {0}")]
    UnknownIssuer(PublicKeyId),
    #[error("root certificate is not a valid self-signed CI certificate")]
    BadRoot,
    #[error("CRL signature does not verify under its issuer")]
    BadCrlSignature,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Ed25519 signing key pair. The private half is the 32-byte seed.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    public_key: [u8; 32],
    private_key: [u8; 32],
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("public_key", &hex::encode_upper(self.public_key))
            .finish_non_exhaustive()
    }
}

impl KeyPair {
    pub fn from_private(private_key: [u8; 32]) -> Self {
        let public_key = SigningKey::from_bytes(&private_key)
            .verifying_key()
            .to_bytes();
        Self {
            public_key,
            private_key,
        }
    }

    pub fn public_key(&self) -> &[u8; 32] {
        &self.public_key
    }

    pub fn private_key(&self) -> &[u8; 32] {
        &self.private_key
    }

    pub fn key_id(&self) -> PublicKeyId {
        PublicKeyId::of(&self.public_key)
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        sign(&self.private_key, message)
    }
}

/// Deterministic key generation: the seed is the private key.
pub fn generate_keypair(seed: [u8; 32]) -> KeyPair {
    KeyPair::from_private(seed)
}

pub fn sign(private_key: &[u8; 32], message: &[u8]) -> Signature {
    SigningKey::from_bytes(private_key).sign(message).to_bytes()
}

/// Strict verification: malformed keys and malleable signatures are rejected.
pub fn verify(public_key: &[u8; 32], message: &[u8], signature: &Signature) -> bool {
    let Ok(key) = VerifyingKey::from_bytes(public_key) else {
        return false;
    };
    let signature = ed25519_dalek::Signature::from_bytes(signature);
    key.verify_strict(message, &signature).is_ok()
}

octets! {
    /// First 20 bytes of SHA-256 over a raw public key.
    pub struct PublicKeyId([u8; 20]);
}

impl PublicKeyId {
    pub fn of(public_key: &[u8]) -> Self {
        let digest = Sha256::digest(public_key);
        let mut id = [0u8; 20];
        id.copy_from_slice(&digest[..20]);
        PublicKeyId(id)
    }

    /// The `04 14 <id>` octet-string form carried in JSON fields.
    pub fn to_octet_string(&self) -> Vec<u8> {
        let mut out = vec![0x04, 0x14];
        out.extend_from_slice(&self.0);
        out
    }

    pub fn from_octet_string(bytes: &[u8]) -> Option<Self> {
        match bytes {
            [0x04, 0x14, rest @ ..] => PublicKeyId::from_slice(rest),
            _ => None,
        }
    }
}

impl std::fmt::Display for PublicKeyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&hex::encode_upper(self.0))
    }
}

impl Serialize for PublicKeyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode_upper(self.0))
    }
}

impl<'de> Deserialize<'de> for PublicKeyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        hex::decode(&text)
            .ok()
            .and_then(|b| PublicKeyId::from_slice(&b))
            .ok_or_else(|| serde::de::Error::custom("expected 40 hex digits"))
    }
}

/// Lists of key ids are encoded as a run of `04 14 <id>` items.
impl FieldValue for Vec<PublicKeyId> {
    fn put(&self, out: &mut Vec<u8>) {
        for id in self {
            out.extend_from_slice(&id.to_octet_string());
        }
    }

    fn get(bytes: &[u8]) -> tlv::Result<Self> {
        let mut r = tlv::TlvReader::new(bytes);
        let mut ids = Vec::new();
        while !r.is_empty() {
            let (tag, content) = r.read()?;
            if tag != 0x04 {
                return Err(CodecError::UnexpectedTag {
                    expected: 0x04,
                    found: tag,
                });
            }
            ids.push(PublicKeyId::get(content)?);
        }
        Ok(ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keypair_is_deterministic_per_seed() {
        let a = generate_keypair([0u8; 32]);
        let b = generate_keypair([0u8; 32]);
        assert_eq!(a, b);
        let c = generate_keypair([1u8; 32]);
        assert_ne!(a.public_key(), c.public_key());
    }

    #[test]
    fn sign_verify_roundtrip_and_tamper() {
        let keys = generate_keypair([7u8; 32]);
        let sig = keys.sign(b"abc");
        assert!(verify(keys.public_key(), b"abc", &sig));
        assert!(!verify(keys.public_key(), b"abd", &sig));
        let mut bad = sig;
        bad[10] ^= 0x01;
        assert!(!verify(keys.public_key(), b"abc", &bad));
        let other = generate_keypair([8u8; 32]);
        assert!(!verify(other.public_key(), b"abc", &sig));
    }

    #[test]
    fn key_id_is_sha256_prefix() {
        let keys = generate_keypair([3u8; 32]);
        let digest = Sha256::digest(keys.public_key());
        assert_eq!(&keys.key_id().0[..], &digest[..20]);
    }

    #[test]
    fn octet_string_form_starts_with_04_14() {
        let id = PublicKeyId([0xAB; 20]);
        let bytes = id.to_octet_string();
        assert_eq!(&bytes[..2], &[0x04, 0x14]);
        assert_eq!(PublicKeyId::from_octet_string(&bytes), Some(id));
        assert_eq!(PublicKeyId::from_octet_string(&bytes[1..]), None);
    }

    #[test]
    fn malformed_public_key_never_verifies() {
        assert!(!verify(&[0xFF; 32], b"m", &[0u8; 64]));
    }
}
