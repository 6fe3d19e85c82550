use crate::tlv::{Fields, Result, TlvCodec, TlvWriter};

use super::{verify, KeyPair, PkiError, PublicKeyId, Signature};

wire_enum! {
    /// Certificate roles. The numeric values are this crate's own assignment.
    pub enum Role {
        Ci = 0 => "ci",
        Eum = 1 => "eum",
        Euicc = 2 => "euicc",
        DpAuth = 3 => "dpauth",
        DpPb = 4 => "dppb",
        DsAuth = 5 => "dsauth",
        Eim = 6 => "eim",
    }
}

/// Allowed issuance edges. A CI may also issue a subordinate CI.
pub fn may_issue(issuer: Role, subject: Role) -> bool {
    use Role::*;
    matches!(
        (issuer, subject),
        (Ci, Ci | Eum | DpAuth | DpPb | DsAuth | Eim) | (Eum, Euicc)
    )
}

/// Everything except the key identifiers and the signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateTemplate {
    pub serial: u64,
    pub subject_name: String,
    pub role: Role,
    pub subject_public_key: [u8; 32],
    pub not_before: u64,
    pub not_after: u64,
    pub oid: Option<String>,
    pub has_crl_distribution_point: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub serial: u64,
    pub subject_name: String,
    pub role: Role,
    pub subject_public_key: [u8; 32],
    pub subject_key_id: PublicKeyId,
    pub authority_key_id: PublicKeyId,
    pub not_before: u64,
    pub not_after: u64,
    pub oid: Option<String>,
    pub has_crl_distribution_point: bool,
    pub signature: Signature,
}

/// Tag of the to-be-signed view of a certificate.
const TBS_TAG: u8 = 0x11;

fn write_tbs(c: &Certificate, w: &mut TlvWriter) {
    w.field(0, &c.serial);
    w.field(1, &c.subject_name);
    w.field(2, &c.role);
    w.field(3, &c.subject_public_key);
    w.field(4, &c.subject_key_id);
    w.field(5, &c.authority_key_id);
    w.field(6, &c.not_before);
    w.field(7, &c.not_after);
    w.opt(8, &c.oid);
    w.flag(9, c.has_crl_distribution_point);
}

impl Certificate {
    pub fn tbs_bytes(&self) -> Vec<u8> {
        let mut w = TlvWriter::default();
        write_tbs(self, &mut w);
        w.into_tlv(TBS_TAG)
    }

    pub fn is_self_signed(&self) -> bool {
        self.subject_key_id == self.authority_key_id
    }

    pub fn verify_signature(&self, issuer_public_key: &[u8; 32]) -> bool {
        verify(issuer_public_key, &self.tbs_bytes(), &self.signature)
    }

    pub fn valid_at(&self, now: u64) -> bool {
        self.not_before <= now && now <= self.not_after
    }
}

impl TlvCodec for Certificate {
    const TAG: u8 = 0x10;

    fn write_fields(&self, w: &mut TlvWriter) {
        write_tbs(self, w);
        w.field(10, &self.signature);
    }

    fn read_fields(f: &mut Fields<'_>) -> Result<Self> {
        Ok(Self {
            serial: f.req(0)?,
            subject_name: f.req(1)?,
            role: f.req(2)?,
            subject_public_key: f.req(3)?,
            subject_key_id: f.req(4)?,
            authority_key_id: f.req(5)?,
            not_before: f.req(6)?,
            not_after: f.req(7)?,
            oid: f.opt(8)?,
            has_crl_distribution_point: f.flag(9)?,
            signature: f.req(10)?,
        })
    }
}

/// Issues a certificate. `issuer_cert = None` produces a self-signed CI root,
/// in which case the template must carry the issuer's own public key.
pub fn issue_certificate(
    issuer_keys: &KeyPair,
    issuer_cert: Option<&Certificate>,
    template: CertificateTemplate,
) -> std::result::Result<Certificate, PkiError> {
    let authority_key_id = match issuer_cert {
        None => {
            if template.role != Role::Ci {
                return Err(PkiError::RoleViolation {
                    issuer: None,
                    subject: template.role,
                });
            }
            if &template.subject_public_key != issuer_keys.public_key() {
                return Err(PkiError::IssuerKeyMismatch);
            }
            issuer_keys.key_id()
        }
        Some(issuer) => {
            if !may_issue(issuer.role, template.role) {
                return Err(PkiError::RoleViolation {
                    issuer: Some(issuer.role),
                    subject: template.role,
                });
            }
            if &issuer.subject_public_key != issuer_keys.public_key() {
                return Err(PkiError::IssuerKeyMismatch);
            }
            issuer.subject_key_id
        }
    };
    if template.not_before >= template.not_after {
        return Err(PkiError::InvalidValidity);
    }
    if matches!(template.role, Role::DpAuth | Role::DpPb) && template.oid.is_none() {
        return Err(PkiError::MissingOid(template.role));
    }
    let mut cert = Certificate {
        serial: template.serial,
        subject_name: template.subject_name,
        role: template.role,
        subject_key_id: PublicKeyId::of(&template.subject_public_key),
        subject_public_key: template.subject_public_key,
        authority_key_id,
        not_before: template.not_before,
        not_after: template.not_after,
        oid: template.oid,
        has_crl_distribution_point: template.has_crl_distribution_point,
        signature: [0; 64],
    };
    cert.signature = issuer_keys.sign(&cert.tbs_bytes());
    Ok(cert)
}
