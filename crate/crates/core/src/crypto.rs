//! Key agreement, segment MACs and deterministic randomness.

use hmac::{Hmac, Mac};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey, StaticSecret};

use crate::messages::{BppCommandId, Iccid, SealedSegment, SegmentMacData, TransactionId};
use crate::tlv::TlvCodec;

/// Registered application provider id prefix of every ISD-P AID.
pub const ISDP_RID: [u8; 5] = [0xA0, 0x00, 0x00, 0x05, 0x59];

/// Per-actor RNG: ChaCha20 keyed by SHA-256 over the scenario seed and a label.
pub fn actor_rng(seed: u64, label: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"rsplab/rng/");
    h.update(seed.to_be_bytes());
    h.update(label.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

pub fn random_bytes<const N: usize>(rng: &mut impl RngCore) -> [u8; N] {
    let mut out = [0u8; N];
    rng.fill_bytes(&mut out);
    out
}

/// A one-time key-agreement pair.
#[derive(Clone)]
pub struct OtKeyPair {
    secret: [u8; 32],
    public: [u8; 32],
}

impl std::fmt::Debug for OtKeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OtKeyPair")
            .field("public", &hex::encode_upper(self.public))
            .finish_non_exhaustive()
    }
}

impl OtKeyPair {
    pub fn generate(rng: &mut impl RngCore) -> Self {
        let secret = StaticSecret::from(random_bytes::<32>(rng));
        let public = PublicKey::from(&secret).to_bytes();
        OtKeyPair {
            secret: secret.to_bytes(),
            public,
        }
    }

    pub fn public(&self) -> &[u8; 32] {
        &self.public
    }

    /// `None` when the peer key is a low-order point.
    pub fn agree(&self, peer_public: &[u8; 32]) -> Option<[u8; 32]> {
        let shared = StaticSecret::from(self.secret).diffie_hellman(&PublicKey::from(*peer_public));
        shared.was_contributory().then(|| shared.to_bytes())
    }
}

/// `SHA-256(shared || transactionId)`.
pub fn session_key(shared: &[u8; 32], transaction_id: &TransactionId) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(shared);
    h.update(transaction_id.0);
    h.finalize().into()
}

fn mac_over(key: &[u8; 32], data: &SegmentMacData) -> Hmac<Sha256> {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key).expect("any key length");
    mac.update(&data.to_tlv());
    mac
}

/// HMAC-SHA-256 truncated to 16 bytes.
pub fn segment_mac(key: &[u8; 32], data: &SegmentMacData) -> [u8; 16] {
    let tag = mac_over(key, data).finalize().into_bytes();
    let mut out = [0u8; 16];
    out.copy_from_slice(&tag[..16]);
    out
}

pub fn seal(
    key: &[u8; 32],
    transaction_id: TransactionId,
    command_id: BppCommandId,
    index: u16,
    payload: Vec<u8>,
) -> SealedSegment {
    let data = SegmentMacData {
        transaction_id,
        command_id,
        index,
        payload,
    };
    let mac = segment_mac(key, &data);
    SealedSegment {
        command_id,
        index,
        payload: data.payload,
        mac,
    }
}

/// Constant-time MAC check of a sealed segment.
pub fn verify_segment(key: &[u8; 32], transaction_id: TransactionId, segment: &SealedSegment) -> bool {
    let data = SegmentMacData {
        transaction_id,
        command_id: segment.command_id,
        index: segment.index,
        payload: segment.payload.clone(),
    };
    mac_over(key, &data).verify_truncated_left(&segment.mac).is_ok()
}

/// RID followed by the first 11 bytes of SHA-256 over the ICCID.
pub fn isdp_aid(iccid: &Iccid) -> Vec<u8> {
    let digest = Sha256::digest(iccid.0);
    let mut aid = ISDP_RID.to_vec();
    aid.extend_from_slice(&digest[..11]);
    aid
}

/// Opaque profile element bytes for an ICCID. Long enough to need several
/// segments.
pub fn profile_elements(iccid: &Iccid) -> Vec<u8> {
    const LEN: usize = 2600;
    let mut out = Vec::with_capacity(LEN);
    let mut counter = 0u32;
    while out.len() < LEN {
        let mut h = Sha256::new();
        h.update(b"rsplab/pe/");
        h.update(iccid.0);
        h.update(counter.to_be_bytes());
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(LEN);
    out
}
