//! eUICC emulator: challenge issuance, server authentication, download
//! preparation, bound profile package installation, cancel-session signing,
//! the notification list, the profile store and eIM configuration state.

mod install;

use std::collections::VecDeque;

use rand_chacha::ChaCha20Rng;

use crate::clock::Clock;
use crate::crypto::{actor_rng, random_bytes, OtKeyPair};
use crate::harness::{invalid_input, undefined_error, Actor, Transport};
use crate::messages::es10_endpoint as ep;
use crate::messages::*;
use crate::pki::{
    validate_chain, verify, Certificate, ChainStatus, Credential, InvalidReason, KeyPair, PublicKeyId, Role,
    TrustStore,
};
use crate::tlv::TlvCodec;

/// How many unconsumed one-time key pairs the eUICC keeps.
pub const MAX_STORED_OT_KEYS: usize = 4;

#[derive(Debug, Clone)]
pub struct EuiccConfig {
    pub address: String,
    pub credential: Credential,
    /// Certificates above the eUICC certificate, nearest first.
    pub chain: Vec<Certificate>,
    /// Roots trusted for verifying servers.
    pub trusted_roots: Vec<Certificate>,
    pub capability: RspCapability,
    pub rat: Rat,
    pub svn: [u8; 3],
    pub free_nvm: u32,
    pub rng_seed: u64,
}

impl EuiccConfig {
    pub fn new(address: impl Into<String>, credential: Credential, chain: Vec<Certificate>) -> Self {
        EuiccConfig {
            address: address.into(),
            credential,
            chain,
            trusted_roots: Vec::new(),
            capability: RspCapability::CRL_STAPLING_V3_SUPPORT | RspCapability::CANCEL_FOR_EMPTY_SPN_PN_SUPPORT,
            rat: Rat { rules: Vec::new() },
            svn: [2, 5, 0],
            free_nvm: 512 * 1024,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ProfileState {
    Disabled,
    Enabled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstalledProfile {
    pub iccid: Iccid,
    pub metadata: ProfileMetadata,
    pub isdp_aid: Vec<u8>,
    pub state: ProfileState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BppCursor {
    NotStarted,
    AwaitingInit,
    AwaitingIsdp,
    AwaitingMetadata,
    AwaitingElements,
    Done,
}

#[derive(Debug, Clone)]
struct StoredOtKey {
    key: OtKeyPair,
    /// Transaction of the session the key was first handed out in.
    binding: TransactionId,
}

#[derive(Debug, Clone)]
pub(crate) struct PendingInstall {
    pub iccid: Iccid,
    pub element_segments: u16,
    pub metadata: Option<ProfileMetadata>,
    pub elements: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub euicc_challenge: Option<Challenge>,
    pub transaction_id: Option<TransactionId>,
    pub server_cert: Option<Certificate>,
    pub crl_stapling_used: bool,
    pub cursor: BppCursor,
    pb_cert: Option<Certificate>,
    ot: Option<StoredOtKey>,
    session_key: Option<[u8; 32]>,
    pending: Option<PendingInstall>,
}

impl Session {
    fn fresh(challenge: Challenge) -> Self {
        Session {
            euicc_challenge: Some(challenge),
            transaction_id: None,
            server_cert: None,
            crl_stapling_used: false,
            cursor: BppCursor::NotStarted,
            pb_cert: None,
            ot: None,
            session_key: None,
            pending: None,
        }
    }

    pub fn has_session_key(&self) -> bool {
        self.session_key.is_some()
    }
}

pub struct Euicc {
    address: String,
    keys: KeyPair,
    cert: Certificate,
    chain: Vec<Certificate>,
    store: TrustStore,
    capability: RspCapability,
    rat: Rat,
    svn: [u8; 3],
    free_nvm: u32,
    profiles: Vec<InstalledProfile>,
    notifications: Vec<ProfileInstallationResult>,
    next_seq: u32,
    eim_config: Option<EimConfigurationData>,
    eim_counter: Option<u32>,
    session: Option<Session>,
    ot_keys: VecDeque<StoredOtKey>,
    rng: ChaCha20Rng,
}

impl Euicc {
    pub fn new(config: EuiccConfig, clock: Clock) -> Self {
        let mut store = TrustStore::new(clock);
        for root in config.trusted_roots {
            // A bad root is simply not trusted.
            let _ = store.add_root(root);
        }
        let rng = actor_rng(config.rng_seed, &format!("euicc/{}", config.address));
        Euicc {
            address: config.address,
            keys: config.credential.keys,
            cert: config.credential.cert,
            chain: config.chain,
            store,
            capability: config.capability,
            rat: config.rat,
            svn: config.svn,
            free_nvm: config.free_nvm,
            profiles: Vec::new(),
            notifications: Vec::new(),
            next_seq: 1,
            eim_config: None,
            eim_counter: None,
            session: None,
            ot_keys: VecDeque::new(),
            rng,
        }
    }

    pub fn eid(&self) -> Eid {
        Eid::of(self.keys.public_key())
    }

    pub fn certificate(&self) -> &Certificate {
        &self.cert
    }

    pub fn profiles(&self) -> &[InstalledProfile] {
        &self.profiles
    }

    pub fn notifications(&self) -> &[ProfileInstallationResult] {
        &self.notifications
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    pub fn eim_config(&self) -> Option<&EimConfigurationData> {
        self.eim_config.as_ref()
    }

    pub fn stored_ot_keys(&self) -> Vec<[u8; 32]> {
        self.ot_keys.iter().map(|k| *k.key.public()).collect()
    }

    /// Places a profile directly, as if installed earlier.
    pub fn preinstall(&mut self, metadata: ProfileMetadata, state: ProfileState) {
        if state == ProfileState::Enabled {
            for p in &mut self.profiles {
                p.state = ProfileState::Disabled;
            }
        }
        self.profiles.push(InstalledProfile {
            iccid: metadata.iccid,
            isdp_aid: crate::crypto::isdp_aid(&metadata.iccid),
            metadata,
            state,
        });
    }

    pub fn set_rat(&mut self, rat: Rat) {
        self.rat = rat;
    }

    fn signing_roots(&self) -> Vec<PublicKeyId> {
        let top = self.chain.last().unwrap_or(&self.cert);
        vec![top.authority_key_id]
    }

    pub fn get_euicc_info1(&self) -> EuiccInfo1 {
        self.get_euicc_info2().info1()
    }

    pub fn get_euicc_info2(&self) -> EuiccInfo2 {
        EuiccInfo2 {
            euicc_ci_pkid_list_for_verification: self.store.root_ids().into_iter().collect(),
            euicc_ci_pkid_list_for_signing: self.signing_roots(),
            euicc_rsp_capability: self.capability,
            svn: self.svn,
            free_non_volatile_memory: self.free_nvm,
            installed_profile_count: self.profiles.len() as u16,
        }
    }

    /// Starts a new session; any previous one is discarded.
    pub fn get_euicc_challenge(&mut self) -> Challenge {
        let challenge = random_bytes(&mut self.rng);
        self.session = Some(Session::fresh(challenge));
        challenge
    }

    pub fn authenticate_server(&mut self, req: &AuthenticateServerRequest) -> AuthenticateServerResponse {
        let txid = req.server_signed1.transaction_id;
        let result = self.check_server(req);
        match result {
            Ok(()) => {}
            Err(code) => {
                self.session = None;
                return AuthenticateServerResponse::Error(AuthenticateResponseError {
                    transaction_id: txid,
                    authenticate_error_code: code,
                });
            }
        }
        let session = self.session.as_mut().expect("checked");
        session.transaction_id = Some(txid);
        session.server_cert = Some(req.server_certificate.clone());
        session.crl_stapling_used = req.crl_stapling_used;

        let euicc_signed1 = EuiccSigned1 {
            transaction_id: txid,
            server_address: req.server_signed1.server_address.clone(),
            server_challenge: req.server_signed1.server_challenge,
            euicc_info2: self.get_euicc_info2(),
            ctx_params1: req.ctx_params1.clone(),
        };
        let euicc_signature1 = self.keys.sign(&euicc_signed1.to_tlv());
        AuthenticateServerResponse::Ok(AuthenticateResponseOk {
            euicc_signed1,
            euicc_signature1,
            euicc_certificate: self.cert.clone(),
            next_cert_in_chain: self.chain.first().cloned().unwrap_or_else(|| self.cert.clone()),
            other_certs_in_chain: self.chain.iter().skip(1).cloned().collect(),
        })
    }

    fn check_server(&mut self, req: &AuthenticateServerRequest) -> Result<(), AuthenticateErrorCode> {
        use AuthenticateErrorCode as E;
        let challenge = self
            .session
            .as_mut()
            .and_then(|s| s.euicc_challenge.take())
            .ok_or(E::NoSession)?;

        let cert = &req.server_certificate;
        let path = match validate_chain(cert, &req.other_certs_in_chain, &self.store) {
            ChainStatus::Valid(path) => path,
            ChainStatus::Invalid(f) if f.reason == InvalidReason::Expired => return Err(E::InvalidCertOrCrlTime),
            ChainStatus::Invalid(_) => return Err(E::InvalidCertificate),
        };
        if cert.role != Role::DpAuth || cert.oid.is_none() {
            return Err(E::InvalidCertificate);
        }
        if !verify(&cert.subject_public_key, &req.server_signed1.to_tlv(), &req.server_signature1) {
            return Err(E::InvalidSignature);
        }
        if req.server_signed1.euicc_challenge != challenge {
            return Err(E::EuiccChallengeMismatch);
        }
        if !self.signing_roots().contains(&req.euicc_ci_pkid_to_be_used) {
            return Err(E::CiPkUnknown);
        }
        if req.crl_stapling_used {
            check_stapled_crls(&path, req, self.store.now())?;
        }
        Ok(())
    }

    pub fn prepare_download(&mut self, req: &PrepareDownloadRequest) -> PrepareDownloadResponse {
        match self.check_prepare(req) {
            Ok(()) => {}
            Err((transaction_id, code)) => {
                return PrepareDownloadResponse::Error(PrepareDownloadResponseError {
                    transaction_id,
                    download_error_code: code,
                })
            }
        }
        let session_txid = req.smdp_signed2.transaction_id;
        let ot = match req
            .smdp_signed2
            .bpp_euicc_otpk
            .and_then(|pk| self.ot_keys.iter().position(|k| k.key.public() == &pk))
        {
            Some(i) => {
                let stored = self.ot_keys.remove(i).expect("index in range");
                self.ot_keys.push_back(stored.clone());
                stored
            }
            None => {
                let stored = StoredOtKey {
                    key: OtKeyPair::generate(&mut self.rng),
                    binding: session_txid,
                };
                self.ot_keys.push_back(stored.clone());
                while self.ot_keys.len() > MAX_STORED_OT_KEYS {
                    self.ot_keys.pop_front();
                }
                stored
            }
        };
        let euicc_signed2 = EuiccSigned2 {
            transaction_id: session_txid,
            euicc_otpk: *ot.key.public(),
            hash_cc: req.hash_cc,
        };
        let euicc_signature2 = self.keys.sign(&euicc_signed2.to_tlv());
        let session = self.session.as_mut().expect("checked");
        session.pb_cert = Some(req.smdp_certificate.clone());
        session.ot = Some(ot);
        session.session_key = None;
        session.pending = None;
        session.cursor = BppCursor::AwaitingInit;
        PrepareDownloadResponse::Ok(PrepareDownloadResponseOk {
            euicc_signed2,
            euicc_signature2,
        })
    }

    fn check_prepare(&self, req: &PrepareDownloadRequest) -> Result<(), (TransactionId, DownloadErrorCode)> {
        use DownloadErrorCode as E;
        let claimed = req.smdp_signed2.transaction_id;
        let session = self.session.as_ref().filter(|s| s.transaction_id.is_some());
        let Some(session) = session else {
            return Err((claimed, E::NoSession));
        };
        let session_txid = session.transaction_id.expect("filtered");
        let auth_cert = session.server_cert.as_ref().expect("set with the transaction id");

        let cert = &req.smdp_certificate;
        let chain_ok = validate_chain(cert, &[], &self.store).is_valid();
        let same_entity = cert.oid.is_some() && cert.oid == auth_cert.oid && cert.authority_key_id == auth_cert.authority_key_id;
        if !chain_ok || cert.role != Role::DpPb || !same_entity {
            return Err((session_txid, E::InvalidCertificate));
        }
        if !verify(&cert.subject_public_key, &req.smdp_signed2.to_tlv(), &req.smdp_signature2) {
            return Err((session_txid, E::InvalidSignature));
        }
        if claimed != session_txid {
            return Err((session_txid, E::InvalidTransactionId));
        }
        Ok(())
    }

    pub fn cancel_session(&mut self, req: &CancelSessionRequest) -> CancelSessionResponse {
        let matches = self
            .session
            .as_ref()
            .is_some_and(|s| s.transaction_id == Some(req.transaction_id));
        if !matches {
            return CancelSessionResponse::Error(CancelSessionErrorCode::InvalidTransactionId);
        }
        let session = self.session.take().expect("checked");
        let smdp_oid = session.server_cert.and_then(|c| c.oid).unwrap_or_default();
        let signed = EuiccCancelSessionSigned {
            transaction_id: req.transaction_id,
            smdp_oid,
            reason: req.reason,
        };
        let signature = self.keys.sign(&signed.to_tlv());
        CancelSessionResponse::Ok(CancelSessionResponseOk {
            euicc_cancel_session_signed: signed,
            euicc_cancel_session_signature: signature,
        })
    }

    pub fn remove_notification(&mut self, seq_number: u32) -> RemoveNotificationStatus {
        match self.notifications.iter().position(|n| n.seq_number() == seq_number) {
            Some(i) => {
                self.notifications.remove(i);
                RemoveNotificationStatus::Ok
            }
            None => RemoveNotificationStatus::UnknownSeqNumber,
        }
    }

    pub fn get_rat(&self) -> Rat {
        self.rat.clone()
    }

    pub fn get_profiles_info(&self) -> ProfileInfoList {
        ProfileInfoList {
            profiles: self
                .profiles
                .iter()
                .map(|p| ProfileInfo {
                    iccid: p.iccid,
                    profile_name: p.metadata.profile_name.clone(),
                    enabled: p.state == ProfileState::Enabled,
                })
                .collect(),
        }
    }

    pub fn eim_configuration(&mut self, req: &EimConfigRequest) -> EimConfigResult {
        let status = match req {
            EimConfigRequest::Add(data) => self.eim_add_config(data.clone()),
            EimConfigRequest::Signed(op) => self.eim_process_signed_op(op),
            EimConfigRequest::Remove(()) => self.eim_remove_config(),
        };
        EimConfigResult {
            status,
            eim_id: self.eim_config.as_ref().map(|c| c.eim_id.clone()),
        }
    }

    pub fn eim_add_config(&mut self, data: EimConfigurationData) -> EimConfigStatus {
        if self.eim_config.is_some() {
            return EimConfigStatus::AlreadyAssociated;
        }
        self.eim_config = Some(data);
        self.eim_counter = None;
        EimConfigStatus::Ok
    }

    pub fn eim_process_signed_op(&mut self, signed: &SignedEimOperation) -> EimConfigStatus {
        let Some(config) = &self.eim_config else {
            return EimConfigStatus::NotAssociated;
        };
        let op = &signed.operation;
        if op.eim_id != config.eim_id || !verify(&config.eim_public_key, &op.to_tlv(), &signed.signature) {
            return EimConfigStatus::BadSignature;
        }
        if self.eim_counter.is_some_and(|last| op.counter <= last) {
            return EimConfigStatus::Replayed;
        }
        match (op.kind, &op.new_config) {
            (EimOperationKind::Replace, Some(new_config)) => {
                self.eim_config = Some(new_config.clone());
                self.eim_counter = Some(op.counter);
            }
            (EimOperationKind::Remove, _) => {
                self.eim_config = None;
                self.eim_counter = None;
            }
            (EimOperationKind::Replace, None) => return EimConfigStatus::BadSignature,
        }
        EimConfigStatus::Ok
    }

    /// Removal is unconditional.
    pub fn eim_remove_config(&mut self) -> EimConfigStatus {
        self.eim_config = None;
        self.eim_counter = None;
        EimConfigStatus::Ok
    }

    fn sign(&self, bytes: &[u8]) -> crate::pki::Signature {
        self.keys.sign(bytes)
    }
}

/// Every certificate with a distribution point needs a stapled CRL from its
/// issuer that verifies, is current and does not list it. Each check runs
/// over the whole path before the next one starts.
fn check_stapled_crls(
    path: &[Certificate],
    req: &AuthenticateServerRequest,
    now: u64,
) -> Result<(), AuthenticateErrorCode> {
    use AuthenticateErrorCode as E;
    let covered: Vec<(&Certificate, &Certificate)> = path
        .windows(2)
        .filter(|w| w[0].has_crl_distribution_point)
        .map(|w| (&w[0], &w[1]))
        .collect();
    let mut found = Vec::new();
    for (cert, issuer) in &covered {
        let crl = req
            .crl_list
            .iter()
            .find(|c| c.issuer_key_id == cert.authority_key_id)
            .ok_or(E::MissingCrl)?;
        found.push((*cert, *issuer, crl));
    }
    if found.iter().any(|(_, issuer, crl)| !crl.verify_signature(&issuer.subject_public_key)) {
        return Err(E::InvalidCrlSignature);
    }
    if found.iter().any(|(_, _, crl)| !crl.current_at(now)) {
        return Err(E::InvalidCertOrCrlTime);
    }
    if found.iter().any(|(cert, _, crl)| crl.is_revoked(cert.serial)) {
        return Err(E::RevokedCert);
    }
    Ok(())
}

fn serve<Req, Resp>(request: &Envelope, f: impl FnOnce(Req) -> Resp) -> Envelope
where
    Req: TlvCodec,
    Resp: TlvCodec,
{
    if request.format != WireFormat::Compact {
        return Envelope::response(request.format, invalid_input(), Vec::new());
    }
    match Req::from_tlv(&request.body) {
        Ok(req) => Envelope::response(WireFormat::Compact, FunctionStatus::Success, f(req).to_tlv()),
        Err(_) => Envelope::response(WireFormat::Compact, invalid_input(), Vec::new()),
    }
}

impl Actor for Euicc {
    fn address(&self) -> &str {
        &self.address
    }

    fn handle(&mut self, _net: &Transport, request: &Envelope) -> Envelope {
        match request.endpoint().unwrap_or_default() {
            ep::GET_EUICC_INFO1 => serve(request, |_: Empty| self.get_euicc_info1()),
            ep::GET_EUICC_CHALLENGE => serve(request, |_: Empty| GetEuiccChallengeResponse {
                euicc_challenge: self.get_euicc_challenge(),
            }),
            ep::AUTHENTICATE_SERVER => serve(request, |r: AuthenticateServerRequest| self.authenticate_server(&r)),
            ep::PREPARE_DOWNLOAD => serve(request, |r: PrepareDownloadRequest| self.prepare_download(&r)),
            ep::LOAD_BPP => serve(request, |r: BppCommand| self.load_bpp(&r)),
            ep::CANCEL_SESSION => serve(request, |r: CancelSessionRequest| self.cancel_session(&r)),
            ep::REMOVE_NOTIFICATION => serve(request, |r: RemoveNotificationRequest| RemoveNotificationResponse {
                status: self.remove_notification(r.seq_number),
            }),
            ep::GET_RAT => serve(request, |_: Empty| self.get_rat()),
            ep::EIM_CONFIGURATION => serve(request, |r: EimConfigRequest| self.eim_configuration(&r)),
            ep::GET_PROFILES_INFO => serve(request, |_: Empty| self.get_profiles_info()),
            _ => Envelope::response(request.format, undefined_error(), Vec::new()),
        }
    }
}
