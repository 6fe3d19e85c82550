use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::tlv::{self, CodecError, Fields, TlvCodec, TlvWriter};

use super::{
    generate_keypair, issue_certificate, issue_crl, Certificate, CertificateTemplate, Crl, KeyPair,
    PkiError, PublicKeyId, Role,
};

/// A key pair together with the certificate for its public half.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credential {
    pub name: String,
    pub keys: KeyPair,
    pub cert: Certificate,
}

impl Credential {
    pub fn key_id(&self) -> PublicKeyId {
        self.cert.subject_key_id
    }
}

impl TlvCodec for Credential {
    const TAG: u8 = 0x16;

    fn write_fields(&self, w: &mut TlvWriter) {
        w.field(0, &self.name);
        w.field(1, self.keys.private_key());
        w.field(2, &self.cert);
    }

    fn read_fields(f: &mut Fields<'_>) -> tlv::Result<Self> {
        let name = f.req(0)?;
        let keys = KeyPair::from_private(f.req(1)?);
        let cert: Certificate = f.req(2)?;
        if &cert.subject_public_key != keys.public_key() {
            return Err(CodecError::InvalidValue("credential key pair"));
        }
        Ok(Self { name, keys, cert })
    }
}

/// Every key, certificate and CRL one scenario needs, derived from one seed.
///
/// `ci_alt` is an independent root; `eum_alt` chains to it. The SM-DP+
/// pair `dpauth`/`dppb` share an OID and an issuer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PkiFixture {
    pub seed: u64,
    pub ci: Credential,
    pub ci_alt: Credential,
    pub eum: Credential,
    pub eum_alt: Credential,
    pub euicc: Credential,
    pub dpauth: Credential,
    pub dppb: Credential,
    pub eim: Credential,
    pub crls: Vec<Crl>,
}

const NAMES: [&str; 8] = ["ci", "ciAlt", "eum", "eumAlt", "euicc", "dpauth", "dppb", "eim"];

impl PkiFixture {
    /// Start of every certificate validity window.
    pub const EPOCH: u64 = 1_700_000_000;
    /// Certificates stay valid for ten years, CRLs for one.
    pub const CERT_LIFETIME: u64 = 10 * 365 * 86_400;
    pub const CRL_LIFETIME: u64 = 365 * 86_400;
    pub const SMDP_OID: &'static str = "1.3.6.1.4.1.31746.1.1";

    pub fn generate(seed: u64) -> Self {
        Self::build(seed).expect("fixture templates are well-formed")
    }

    fn build(seed: u64) -> Result<Self, PkiError> {
        let key = |label: &str| generate_keypair(derive_key_seed(seed, label));
        let root = |serial, name: &str, label: &str| -> Result<Credential, PkiError> {
            let keys = key(label);
            let cert = issue_certificate(&keys, None, template(serial, name, Role::Ci, &keys, None, false))?;
            Ok(Credential { name: label.into(), keys, cert })
        };
        let child = |issuer: &Credential,
                     serial,
                     name: &str,
                     label: &str,
                     role,
                     oid: Option<&str>,
                     crl_dp|
         -> Result<Credential, PkiError> {
            let keys = key(label);
            let cert = issue_certificate(
                &issuer.keys,
                Some(&issuer.cert),
                template(serial, name, role, &keys, oid, crl_dp),
            )?;
            Ok(Credential { name: label.into(), keys, cert })
        };

        let ci = root(1, "GSMA CI", "ci")?;
        let ci_alt = root(2, "Independent eSIM CA", "ciAlt")?;
        let eum = child(&ci, 10, "EUM One", "eum", Role::Eum, None, true)?;
        let eum_alt = child(&ci_alt, 11, "EUM Two", "eumAlt", Role::Eum, None, true)?;
        let euicc = child(&eum, 100, "eUICC", "euicc", Role::Euicc, None, false)?;
        let oid = Some(Self::SMDP_OID);
        let dpauth = child(&ci, 200, "SM-DP+ auth", "dpauth", Role::DpAuth, oid, true)?;
        let dppb = child(&ci, 201, "SM-DP+ pb", "dppb", Role::DpPb, oid, true)?;
        let eim = child(&ci, 300, "eIM", "eim", Role::Eim, None, false)?;

        let crl_window = (Self::EPOCH, Self::EPOCH + Self::CRL_LIFETIME);
        let crls = vec![
            issue_crl(&ci.keys, crl_window.0, crl_window.1, [])?,
            issue_crl(&ci_alt.keys, crl_window.0, crl_window.1, [])?,
            issue_crl(&eum.keys, crl_window.0, crl_window.1, [])?,
        ];
        Ok(Self {
            seed,
            ci,
            ci_alt,
            eum,
            eum_alt,
            euicc,
            dpauth,
            dppb,
            eim,
            crls,
        })
    }

    pub fn credentials(&self) -> [&Credential; 8] {
        [
            &self.ci,
            &self.ci_alt,
            &self.eum,
            &self.eum_alt,
            &self.euicc,
            &self.dpauth,
            &self.dppb,
            &self.eim,
        ]
    }

    /// Credential name to subject key id, for display.
    pub fn key_ids(&self) -> BTreeMap<String, PublicKeyId> {
        self.credentials()
            .iter()
            .map(|c| (c.name.clone(), c.key_id()))
            .collect()
    }

    /// A further eUICC under the same EUM. Index 0 is `euicc` itself.
    pub fn extra_euicc(&self, index: u32) -> Credential {
        if index == 0 {
            return self.euicc.clone();
        }
        let label = format!("euicc-{index}");
        let keys = generate_keypair(derive_key_seed(self.seed, &label));
        let t = template(100 + u64::from(index), "eUICC", Role::Euicc, &keys, None, false);
        let cert = issue_certificate(&self.eum.keys, Some(&self.eum.cert), t).expect("EUM may issue eUICC certificates");
        Credential { name: label, keys, cert }
    }

    pub fn crl_of(&self, issuer: &PublicKeyId) -> Option<&Crl> {
        self.crls.iter().find(|c| &c.issuer_key_id == issuer)
    }
}

impl TlvCodec for PkiFixture {
    const TAG: u8 = 0x15;

    fn write_fields(&self, w: &mut TlvWriter) {
        w.field(0, &self.seed);
        let creds: Vec<Credential> = self.credentials().into_iter().cloned().collect();
        w.field(1, &creds);
        w.field(2, &self.crls);
    }

    fn read_fields(f: &mut Fields<'_>) -> tlv::Result<Self> {
        let seed = f.req(0)?;
        let creds: Vec<Credential> = f.req(1)?;
        let crls = f.req(2)?;
        let names: Vec<&str> = creds.iter().map(|c| c.name.as_str()).collect();
        if names != NAMES {
            return Err(CodecError::InvalidValue("fixture credential set"));
        }
        let mut it = creds.into_iter();
        let mut next = || it.next().expect("length checked above");
        Ok(Self {
            seed,
            ci: next(),
            ci_alt: next(),
            eum: next(),
            eum_alt: next(),
            euicc: next(),
            dpauth: next(),
            dppb: next(),
            eim: next(),
            crls,
        })
    }
}

/// Per-label 32-byte key seed: SHA-256 over a domain string, the scenario
/// seed and the label.
pub fn derive_key_seed(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"rsplab/pki/");
    h.update(seed.to_be_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

fn template(
    serial: u64,
    name: &str,
    role: Role,
    keys: &KeyPair,
    oid: Option<&str>,
    has_crl_distribution_point: bool,
) -> CertificateTemplate {
    CertificateTemplate {
        serial,
        subject_name: name.into(),
        role,
        subject_public_key: *keys.public_key(),
        not_before: PkiFixture::EPOCH,
        not_after: PkiFixture::EPOCH + PkiFixture::CERT_LIFETIME,
        oid: oid.map(Into::into),
        has_crl_distribution_point,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::Clock;
    use crate::pki::{validate_chain, TrustStore};

    #[test]
    fn same_seed_same_bytes() {
        assert_eq!(PkiFixture::generate(1).to_tlv(), PkiFixture::generate(1).to_tlv());
    }

    #[test]
    fn different_seeds_different_key_ids() {
        let a = PkiFixture::generate(1).key_ids();
        let b = PkiFixture::generate(2).key_ids();
        for (name, id) in &a {
            assert_ne!(Some(id), b.get(name), "{name}");
        }
    }

    #[test]
    fn tlv_roundtrip() {
        let f = PkiFixture::generate(9);
        assert_eq!(PkiFixture::from_tlv(&f.to_tlv()).unwrap(), f);
    }

    #[test]
    fn every_chain_validates() {
        let f = PkiFixture::generate(3);
        let mut store = TrustStore::new(Clock::at(PkiFixture::EPOCH + 86_400));
        store.add_root(f.ci.cert.clone()).unwrap();
        store.add_root(f.ci_alt.cert.clone()).unwrap();
        for crl in &f.crls {
            let issuer = f
                .credentials()
                .into_iter()
                .find(|c| c.key_id() == crl.issuer_key_id)
                .unwrap();
            assert!(crl.verify_signature(issuer.keys.public_key()));
        }
        let chains = [
            (&f.euicc, vec![f.eum.cert.clone()]),
            (&f.eum_alt, vec![]),
            (&f.dpauth, vec![]),
            (&f.dppb, vec![]),
            (&f.eim, vec![]),
        ];
        for (leaf, chain) in chains {
            assert!(validate_chain(&leaf.cert, &chain, &store).is_valid(), "{}", leaf.name);
        }
        assert_eq!(f.dpauth.cert.oid, f.dppb.cert.oid);
    }
}
