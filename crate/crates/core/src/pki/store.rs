use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, RwLock};

use crate::clock::Clock;

use super::{may_issue, Certificate, Crl, PkiError, PublicKeyId, Role};

/// Longest issuer path walked before giving up.
const MAX_DEPTH: usize = 8;

wire_enum! {
    /// Why a chain failed, in precedence order.
    pub enum InvalidReason {
        BadSignature = 0 => "badSignature",
        UntrustedRoot = 1 => "untrustedRoot",
        Revoked = 2 => "revoked",
        Expired = 3 => "expired",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainFailure {
    pub reason: InvalidReason,
    /// Position of the failing link: 0 is the leaf.
    pub depth: usize,
    pub serial: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainStatus {
    /// The validated path, leaf first, root last.
    Valid(Vec<Certificate>),
    Invalid(ChainFailure),
}

impl ChainStatus {
    pub fn is_valid(&self) -> bool {
        matches!(self, ChainStatus::Valid(_))
    }

    pub fn failure(&self) -> Option<ChainFailure> {
        match self {
            ChainStatus::Valid(_) => None,
            ChainStatus::Invalid(f) => Some(*f),
        }
    }

    pub fn root_id(&self) -> Option<PublicKeyId> {
        match self {
            ChainStatus::Valid(path) => path.last().map(|c| c.subject_key_id),
            ChainStatus::Invalid(_) => None,
        }
    }
}

/// Latest CRL per issuer, shared between every store that points at it so
/// a revocation published mid-run is seen by all holders.
#[derive(Debug, Clone, Default)]
pub struct CrlDirectory(Arc<RwLock<BTreeMap<PublicKeyId, Crl>>>);

impl CrlDirectory {
    pub fn get(&self, issuer: &PublicKeyId) -> Option<Crl> {
        self.0.read().expect("crl lock").get(issuer).cloned()
    }

    /// Keeps the CRL with the highest `thisUpdate`; a tie goes to the newcomer.
    /// Callers are expected to have checked the signature.
    pub fn publish(&self, crl: Crl) {
        let mut map = self.0.write().expect("crl lock");
        match map.get(&crl.issuer_key_id) {
            Some(old) if old.this_update > crl.this_update => {}
            _ => {
                map.insert(crl.issuer_key_id, crl);
            }
        }
    }

    pub fn all(&self) -> Vec<Crl> {
        self.0.read().expect("crl lock").values().cloned().collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrustStore {
    roots: BTreeMap<PublicKeyId, Certificate>,
    certs: BTreeMap<PublicKeyId, Certificate>,
    crls: CrlDirectory,
    clock: Clock,
}

impl TrustStore {
    pub fn new(clock: Clock) -> Self {
        Self::with_crls(clock, CrlDirectory::default())
    }

    pub fn with_crls(clock: Clock, crls: CrlDirectory) -> Self {
        Self {
            roots: BTreeMap::new(),
            certs: BTreeMap::new(),
            crls,
            clock,
        }
    }

    pub fn add_root(&mut self, cert: Certificate) -> Result<(), PkiError> {
        if cert.role != Role::Ci
            || !cert.is_self_signed()
            || !cert.verify_signature(&cert.subject_public_key)
        {
            return Err(PkiError::BadRoot);
        }
        self.roots.insert(cert.subject_key_id, cert);
        Ok(())
    }

    pub fn add_cert(&mut self, cert: Certificate) -> Result<(), PkiError> {
        if self.lookup(&cert.authority_key_id).is_none() {
            return Err(PkiError::UnknownIssuer(cert.authority_key_id));
        }
        self.certs.insert(cert.subject_key_id, cert);
        Ok(())
    }

    pub fn add_crl(&self, crl: Crl) -> Result<(), PkiError> {
        let issuer = self
            .lookup(&crl.issuer_key_id)
            .ok_or(PkiError::UnknownIssuer(crl.issuer_key_id))?;
        if !crl.verify_signature(&issuer.subject_public_key) {
            return Err(PkiError::BadCrlSignature);
        }
        self.crls.publish(crl);
        Ok(())
    }

    pub fn lookup(&self, key_id: &PublicKeyId) -> Option<&Certificate> {
        self.roots.get(key_id).or_else(|| self.certs.get(key_id))
    }

    pub fn root_ids(&self) -> BTreeSet<PublicKeyId> {
        self.roots.keys().copied().collect()
    }

    pub fn is_root(&self, key_id: &PublicKeyId) -> bool {
        self.roots.contains_key(key_id)
    }

    pub fn root(&self, key_id: &PublicKeyId) -> Option<&Certificate> {
        self.roots.get(key_id)
    }

    pub fn crl(&self, issuer: &PublicKeyId) -> Option<Crl> {
        self.crls.get(issuer)
    }

    pub fn crls(&self) -> &CrlDirectory {
        &self.crls
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }
}

/// Checks the four conditions over the whole path. When several fail, the
/// reported reason is the first of badSignature, untrustedRoot, revoked,
/// expired; within one reason the link closest to the root is reported.
pub fn validate_chain(leaf: &Certificate, chain: &[Certificate], store: &TrustStore) -> ChainStatus {
    let (path, complete) = build_path(leaf, chain, store);
    let fail = |reason, depth: usize| {
        ChainStatus::Invalid(ChainFailure {
            reason,
            depth,
            serial: path[depth].serial,
        })
    };
    let top = path.len() - 1;

    for depth in (0..path.len()).rev() {
        let cert = &path[depth];
        let issuer_key = if depth < top {
            Some(&path[depth + 1].subject_public_key)
        } else if cert.is_self_signed() {
            Some(&cert.subject_public_key)
        } else {
            None
        };
        if let Some(key) = issuer_key {
            if !cert.verify_signature(key) {
                return fail(InvalidReason::BadSignature, depth);
            }
        }
    }

    let root = &path[top];
    let anchored = complete
        && root.role == Role::Ci
        && store
            .root(&root.subject_key_id)
            .is_some_and(|trusted| trusted.subject_public_key == root.subject_public_key);
    if !anchored {
        return fail(InvalidReason::UntrustedRoot, top);
    }
    for depth in (0..top).rev() {
        if !may_issue(path[depth + 1].role, path[depth].role) {
            return fail(InvalidReason::UntrustedRoot, depth);
        }
    }

    for depth in (0..top).rev() {
        let cert = &path[depth];
        if store
            .crl(&cert.authority_key_id)
            .is_some_and(|crl| crl.is_revoked(cert.serial))
        {
            return fail(InvalidReason::Revoked, depth);
        }
    }

    let now = store.now();
    for depth in (0..path.len()).rev() {
        if !path[depth].valid_at(now) {
            return fail(InvalidReason::Expired, depth);
        }
    }

    ChainStatus::Valid(path)
}

/// Walks authority key ids upward. Returns the path and whether it reached a
/// self-signed certificate.
fn build_path(leaf: &Certificate, chain: &[Certificate], store: &TrustStore) -> (Vec<Certificate>, bool) {
    let mut path = vec![leaf.clone()];
    loop {
        let current = path.last().expect("path is never empty");
        if current.is_self_signed() {
            return (path, true);
        }
        if path.len() >= MAX_DEPTH {
            return (path, false);
        }
        let akid = current.authority_key_id;
        let issuer = chain
            .iter()
            .find(|c| c.subject_key_id == akid)
            .or_else(|| store.lookup(&akid))
            .cloned();
        match issuer {
            Some(issuer) => path.push(issuer),
            None => return (path, false),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pki::{generate_keypair, issue_certificate, issue_crl, CertificateTemplate, KeyPair};

    struct Tiny {
        ci: KeyPair,
        root: Certificate,
        eum: KeyPair,
        eum_cert: Certificate,
        leaf: Certificate,
        store: TrustStore,
    }

    fn template(serial: u64, role: Role, keys: &KeyPair, not_after: u64) -> CertificateTemplate {
        CertificateTemplate {
            serial,
            subject_name: format!("{role}"),
            role,
            subject_public_key: *keys.public_key(),
            not_before: 0,
            not_after,
            oid: None,
            has_crl_distribution_point: true,
        }
    }

    fn tiny() -> Tiny {
        let ci = generate_keypair([1; 32]);
        let eum = generate_keypair([2; 32]);
        let eu = generate_keypair([3; 32]);
        let root = issue_certificate(&ci, None, template(1, Role::Ci, &ci, 1000)).unwrap();
        let eum_cert = issue_certificate(&ci, Some(&root), template(2, Role::Eum, &eum, 1000)).unwrap();
        let leaf = issue_certificate(&eum, Some(&eum_cert), template(3, Role::Euicc, &eu, 500)).unwrap();
        let mut store = TrustStore::new(Clock::at(100));
        store.add_root(root.clone()).unwrap();
        Tiny {
            ci,
            root,
            eum,
            eum_cert,
            leaf,
            store,
        }
    }

    #[test]
    fn three_link_chain_is_valid() {
        let t = tiny();
        let status = validate_chain(&t.leaf, &[t.eum_cert.clone()], &t.store);
        assert_eq!(status.root_id(), Some(t.root.subject_key_id));
        // independent per-link check
        assert!(t.leaf.verify_signature(t.eum.public_key()));
        assert!(t.eum_cert.verify_signature(t.ci.public_key()));
    }

    #[test]
    fn revoked_eum_cascades_to_leaf() {
        let t = tiny();
        t.store
            .add_crl(issue_crl(&t.ci, 0, 1000, [t.eum_cert.serial]).unwrap())
            .unwrap();
        let status = validate_chain(&t.leaf, &[t.eum_cert.clone()], &t.store);
        let failure = status.failure().unwrap();
        assert_eq!(failure.reason, InvalidReason::Revoked);
        assert_eq!(failure.depth, 1);
        let eum_status = validate_chain(&t.eum_cert, &[], &t.store);
        assert_eq!(eum_status.failure().unwrap().reason, InvalidReason::Revoked);
    }

    #[test]
    fn expiry_is_checked_against_the_store_clock() {
        let t = tiny();
        assert!(validate_chain(&t.leaf, &[t.eum_cert.clone()], &t.store).is_valid());
        t.store.clock().set(501);
        let f = validate_chain(&t.leaf, &[t.eum_cert.clone()], &t.store)
            .failure()
            .unwrap();
        assert_eq!((f.reason, f.depth), (InvalidReason::Expired, 0));
    }

    #[test]
    fn missing_intermediate_is_untrusted() {
        let t = tiny();
        let f = validate_chain(&t.leaf, &[], &t.store).failure().unwrap();
        assert_eq!(f.reason, InvalidReason::UntrustedRoot);
    }

    #[test]
    fn foreign_root_is_untrusted() {
        let t = tiny();
        let store = TrustStore::new(Clock::at(100));
        let f = validate_chain(&t.leaf, &[t.eum_cert.clone(), t.root.clone()], &store)
            .failure()
            .unwrap();
        assert_eq!((f.reason, f.depth), (InvalidReason::UntrustedRoot, 2));
    }

    #[test]
    fn bad_signature_outranks_everything() {
        let t = tiny();
        t.store
            .add_crl(issue_crl(&t.ci, 0, 1000, [t.eum_cert.serial]).unwrap())
            .unwrap();
        t.store.clock().set(5000);
        let mut leaf = t.leaf.clone();
        leaf.subject_name.push('x');
        let f = validate_chain(&leaf, &[t.eum_cert.clone()], &t.store)
            .failure()
            .unwrap();
        assert_eq!((f.reason, f.depth), (InvalidReason::BadSignature, 0));
    }

    #[test]
    fn latest_crl_wins() {
        let t = tiny();
        t.store
            .add_crl(issue_crl(&t.ci, 10, 1000, [t.eum_cert.serial]).unwrap())
            .unwrap();
        t.store.add_crl(issue_crl(&t.ci, 5, 1000, []).unwrap()).unwrap();
        assert!(!validate_chain(&t.leaf, &[t.eum_cert.clone()], &t.store).is_valid());
        t.store.add_crl(issue_crl(&t.ci, 20, 1000, []).unwrap()).unwrap();
        assert!(validate_chain(&t.leaf, &[t.eum_cert.clone()], &t.store).is_valid());
    }

    #[test]
    fn crl_must_verify_under_its_issuer() {
        let t = tiny();
        let mut crl = issue_crl(&t.ci, 0, 1000, [9]).unwrap();
        crl.revoked_serials.insert(10);
        assert_eq!(t.store.add_crl(crl), Err(PkiError::BadCrlSignature));
    }
}
