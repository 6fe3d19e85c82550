use std::collections::BTreeSet;

use crate::tlv::{self, CodecError, FieldValue, Fields, TlvCodec, TlvReader, TlvWriter};

use super::{verify, KeyPair, PkiError, PublicKeyId, Signature};

const TBS_TAG: u8 = 0x13;
const SERIAL_TAG: u8 = 0x02;

/// Full-list revocation list for one issuer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crl {
    pub issuer_key_id: PublicKeyId,
    pub this_update: u64,
    pub next_update: u64,
    pub revoked_serials: BTreeSet<u64>,
    pub signature: Signature,
}

fn write_tbs(c: &Crl, w: &mut TlvWriter) {
    w.field(0, &c.issuer_key_id);
    w.field(1, &c.this_update);
    w.field(2, &c.next_update);
    w.field(3, &c.revoked_serials);
}

impl Crl {
    pub fn tbs_bytes(&self) -> Vec<u8> {
        let mut w = TlvWriter::default();
        write_tbs(self, &mut w);
        w.into_tlv(TBS_TAG)
    }

    pub fn verify_signature(&self, issuer_public_key: &[u8; 32]) -> bool {
        verify(issuer_public_key, &self.tbs_bytes(), &self.signature)
    }

    pub fn is_revoked(&self, serial: u64) -> bool {
        self.revoked_serials.contains(&serial)
    }

    /// Current at `now`: issued in the past and not yet superseded.
    pub fn current_at(&self, now: u64) -> bool {
        self.this_update <= now && now < self.next_update
    }
}

impl TlvCodec for Crl {
    const TAG: u8 = 0x12;

    fn write_fields(&self, w: &mut TlvWriter) {
        write_tbs(self, w);
        w.field(4, &self.signature);
    }

    fn read_fields(f: &mut Fields<'_>) -> tlv::Result<Self> {
        Ok(Self {
            issuer_key_id: f.req(0)?,
            this_update: f.req(1)?,
            next_update: f.req(2)?,
            revoked_serials: f.req(3)?,
            signature: f.req(4)?,
        })
    }
}

/// Serial sets are written in ascending order; decoding insists on it.
impl FieldValue for BTreeSet<u64> {
    fn put(&self, out: &mut Vec<u8>) {
        for serial in self {
            let mut content = Vec::new();
            serial.put(&mut content);
            tlv::push_tlv(out, SERIAL_TAG, &content);
        }
    }

    fn get(bytes: &[u8]) -> tlv::Result<Self> {
        let mut r = TlvReader::new(bytes);
        let mut set = BTreeSet::new();
        let mut last = None;
        while !r.is_empty() {
            let (tag, content) = r.read()?;
            if tag != SERIAL_TAG {
                return Err(CodecError::UnexpectedTag {
                    expected: SERIAL_TAG,
                    found: tag,
                });
            }
            let serial = u64::get(content)?;
            if last.is_some_and(|l| serial <= l) {
                return Err(CodecError::InvalidValue("serial set order"));
            }
            last = Some(serial);
            set.insert(serial);
        }
        Ok(set)
    }
}

pub fn issue_crl(
    issuer_keys: &KeyPair,
    this_update: u64,
    next_update: u64,
    revoked_serials: impl IntoIterator<Item = u64>,
) -> Result<Crl, PkiError> {
    if this_update >= next_update {
        return Err(PkiError::InvalidValidity);
    }
    let mut crl = Crl {
        issuer_key_id: issuer_keys.key_id(),
        this_update,
        next_update,
        revoked_serials: revoked_serials.into_iter().collect(),
        signature: [0; 64],
    };
    crl.signature = issuer_keys.sign(&crl.tbs_bytes());
    Ok(crl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pki::generate_keypair;

    #[test]
    fn roundtrip_and_signature() {
        let k = generate_keypair([5; 32]);
        let crl = issue_crl(&k, 10, 20, [7, 3, 300]).unwrap();
        assert!(crl.verify_signature(k.public_key()));
        assert!(crl.is_revoked(300));
        assert!(!crl.is_revoked(4));
        assert_eq!(Crl::from_tlv(&crl.to_tlv()).unwrap(), crl);
    }

    #[test]
    fn window_must_be_nonempty() {
        let k = generate_keypair([5; 32]);
        assert_eq!(issue_crl(&k, 20, 20, []), Err(PkiError::InvalidValidity));
    }

    #[test]
    fn unsorted_serials_are_rejected() {
        let bytes = [0x02, 0x01, 0x05, 0x02, 0x01, 0x03];
        assert!(<BTreeSet<u64> as FieldValue>::get(&bytes).is_err());
        let dup = [0x02, 0x01, 0x05, 0x02, 0x01, 0x05];
        assert!(<BTreeSet<u64> as FieldValue>::get(&dup).is_err());
    }
}
