//! SM-DP+ engine: mutual authentication on the server side, download order
//! lifecycle, bound profile package preparation and ES2+ notifications.

mod order;

pub use order::{BoundBpp, OrderSpec, OrderState, ProfileOrder};

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::clock::Clock;
use crate::crypto::{actor_rng, profile_elements, random_bytes, seal, session_key, OtKeyPair};
use crate::harness::{invalid_input, undefined_error, Actor, Transport};
use crate::messages::*;
use crate::pki::{
    validate_chain, verify, Certificate, ChainStatus, Credential, CrlDirectory, InvalidReason, PublicKeyId, Role,
    TrustStore,
};
use crate::tlv::TlvCodec;

/// Decides whether a device may receive a profile at all.
pub type Eligibility = Arc<dyn Fn(&DeviceInfo, &EuiccInfo2) -> bool + Send + Sync>;

pub const DEFAULT_CC_RETRY_LIMIT: u32 = 3;

#[derive(Clone)]
pub struct SmdpConfig {
    pub address: String,
    pub dpauth: Credential,
    pub dppb: Credential,
    /// Certificates above the SM-DP+ certificates, nearest first.
    pub chain: Vec<Certificate>,
    pub trusted_roots: Vec<Certificate>,
    pub crls: CrlDirectory,
    pub cc_retry_limit: u32,
    pub eligibility: Option<Eligibility>,
    pub rng_seed: u64,
}

impl SmdpConfig {
    pub fn new(address: impl Into<String>, dpauth: Credential, dppb: Credential) -> Self {
        SmdpConfig {
            address: address.into(),
            dpauth,
            dppb,
            chain: Vec::new(),
            trusted_roots: Vec::new(),
            crls: CrlDirectory::default(),
            cc_retry_limit: DEFAULT_CC_RETRY_LIMIT,
            eligibility: None,
            rng_seed: 0,
        }
    }
}

/// One call of ES2+.HandleNotification towards the operator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Es2Notification {
    pub notification_event: String,
    pub notification_event_status: String,
    pub notification_receiver_identifier: String,
    pub notification_identifier: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub const EVENT_BPP_INSTALLATION: &str = "BPP installation";
pub const EVENT_DOWNLOAD_CANCELLED: &str = "Download cancelled";
pub const STATUS_SUCCESS: &str = "Executed-Success";
pub const STATUS_FAILED: &str = "Failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum BppDecision {
    Reuse,
    Rebind,
    Create,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BppLogEntry {
    pub matching_id: String,
    pub transaction_id: TransactionId,
    pub decision: BppDecision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SessionStage {
    Initiated,
    ClientAuthenticated,
    BppIssued,
    Closed,
}

#[derive(Debug, Clone)]
struct Session {
    stage: SessionStage,
    server_challenge: Challenge,
    euicc_info1: EuiccInfo1,
    lpa_capability: RspCapability,
    ci_pkid: PublicKeyId,
    euicc_cert: Option<Certificate>,
    eid: Option<Eid>,
    matching_id: Option<String>,
    state_before: Option<OrderState>,
}

/// Who sent a profile installation result, by binding transaction.
#[derive(Debug, Clone)]
struct Binding {
    matching_id: String,
    euicc_cert: Certificate,
}

pub struct Smdp {
    address: String,
    dpauth: Credential,
    dppb: Credential,
    chain: Vec<Certificate>,
    store: TrustStore,
    cc_retry_limit: u32,
    eligibility: Option<Eligibility>,
    orders: BTreeMap<String, ProfileOrder>,
    sessions: BTreeMap<TransactionId, Session>,
    bindings: BTreeMap<TransactionId, Binding>,
    operator_log: Vec<Es2Notification>,
    ds_events: Vec<String>,
    bpp_log: Vec<BppLogEntry>,
    events: Vec<String>,
    rng: ChaCha20Rng,
}

type Reply<T, E> = Result<T, E>;

impl Smdp {
    pub fn new(config: SmdpConfig, clock: Clock) -> Self {
        let mut store = TrustStore::with_crls(clock, config.crls);
        for root in config.trusted_roots {
            let _ = store.add_root(root);
        }
        let rng = actor_rng(config.rng_seed, &format!("smdp/{}", config.address));
        Smdp {
            address: config.address,
            dpauth: config.dpauth,
            dppb: config.dppb,
            chain: config.chain,
            store,
            cc_retry_limit: config.cc_retry_limit,
            eligibility: config.eligibility,
            orders: BTreeMap::new(),
            sessions: BTreeMap::new(),
            bindings: BTreeMap::new(),
            operator_log: Vec::new(),
            ds_events: Vec::new(),
            bpp_log: Vec::new(),
            events: Vec::new(),
            rng,
        }
    }

    pub fn address(&self) -> &str {
        &self.address
    }

    pub fn add_order(&mut self, spec: OrderSpec) {
        let order = ProfileOrder::from_spec(spec);
        self.orders.insert(order.matching_id.clone(), order);
    }

    pub fn order(&self, matching_id: &str) -> Option<&ProfileOrder> {
        self.orders.get(matching_id)
    }

    pub fn orders(&self) -> impl Iterator<Item = &ProfileOrder> {
        self.orders.values()
    }

    pub fn operator_log(&self) -> &[Es2Notification] {
        &self.operator_log
    }

    pub fn ds_events(&self) -> &[String] {
        &self.ds_events
    }

    pub fn bpp_log(&self) -> &[BppLogEntry] {
        &self.bpp_log
    }

    /// Diagnostic markers, such as a missing common root on an eUICC that
    /// could have been updated.
    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn session_stage(&self, txid: &TransactionId) -> Option<SessionStage> {
        self.sessions.get(txid).map(|s| s.stage)
    }

    fn dpauth_root(&self) -> PublicKeyId {
        self.chain.last().unwrap_or(&self.dpauth.cert).authority_key_id
    }

    pub fn initiate_authentication(
        &mut self,
        req: &InitiateAuthenticationRequest,
    ) -> Reply<InitiateAuthenticationOk, InitiateAuthErrorCode> {
        if req.smdp_address != self.address {
            return Err(InitiateAuthErrorCode::InvalidSmdpAddress);
        }
        let info = &req.euicc_info1;
        if !info.euicc_ci_pkid_list_for_verification.contains(&self.dpauth_root()) {
            if info.euicc_rsp_capability.contains(RspCapability::EUICC_CI_UPDATE_SUPPORT) {
                self.events.push("noCommonRoot: eUICC supports CI update".into());
            }
            return Err(InitiateAuthErrorCode::NoCommonRoot);
        }
        let ci_pkid = info
            .euicc_ci_pkid_list_for_signing
            .iter()
            .find(|id| self.store.is_root(id))
            .copied()
            .ok_or(InitiateAuthErrorCode::NoCommonRoot)?;

        let transaction_id = TransactionId(random_bytes(&mut self.rng));
        let server_challenge: Challenge = random_bytes(&mut self.rng);
        let server_signed1 = ServerSigned1 {
            transaction_id,
            euicc_challenge: req.euicc_challenge,
            server_address: self.address.clone(),
            server_challenge,
        };
        let server_signature1 = self.dpauth.keys.sign(&server_signed1.to_tlv());
        self.sessions.insert(
            transaction_id,
            Session {
                stage: SessionStage::Initiated,
                server_challenge,
                euicc_info1: info.clone(),
                lpa_capability: req.lpa_rsp_capability,
                ci_pkid,
                euicc_cert: None,
                eid: None,
                matching_id: None,
                state_before: None,
            },
        );
        Ok(InitiateAuthenticationOk {
            transaction_id,
            server_signed1,
            server_signature1,
            euicc_ci_pkid_to_be_used: ci_pkid,
            server_certificate: self.dpauth.cert.clone(),
            other_certs_in_chain: self.chain.clone(),
            crl_list: self.stapled_crls(),
        })
    }

    /// Current CRLs covering every certificate on the DPauth path that names
    /// a distribution point.
    fn stapled_crls(&self) -> Vec<crate::pki::Crl> {
        std::iter::once(&self.dpauth.cert)
            .chain(&self.chain)
            .filter(|c| c.has_crl_distribution_point)
            .filter_map(|c| self.store.crl(&c.authority_key_id))
            .collect()
    }

    pub fn authenticate_client(
        &mut self,
        req: &AuthenticateClientRequest,
    ) -> Reply<AuthenticateClientOk, AuthenticateClientErrorCode> {
        use AuthenticateClientErrorCode as E;
        let txid = req.transaction_id;
        let session = match self.sessions.get(&txid) {
            Some(s) if s.stage == SessionStage::Initiated => s.clone(),
            _ => return Err(E::InvalidTransactionId),
        };

        let mut above = vec![req.next_cert_in_chain.clone()];
        above.extend(req.other_certs_in_chain.iter().cloned());
        let top = above.last().expect("never empty");
        if top.authority_key_id != session.ci_pkid && top.subject_key_id != session.ci_pkid {
            return Err(E::CiPkUnknown);
        }
        let eum = &req.next_cert_in_chain;
        match validate_chain(eum, &req.other_certs_in_chain, &self.store) {
            ChainStatus::Invalid(f) if f.reason == InvalidReason::Expired => return Err(E::EumCertificateExpired),
            ChainStatus::Invalid(_) => return Err(E::EumCertificateInvalid),
            ChainStatus::Valid(_) if eum.role != Role::Eum => return Err(E::EumCertificateInvalid),
            ChainStatus::Valid(_) => {}
        }
        let cert = &req.euicc_certificate;
        match validate_chain(cert, &above, &self.store) {
            ChainStatus::Invalid(f) if f.reason == InvalidReason::Expired => {
                return Err(E::EuiccCertificateExpired)
            }
            ChainStatus::Invalid(_) => return Err(E::EuiccCertificateInvalid),
            ChainStatus::Valid(_) if cert.role != Role::Euicc => return Err(E::EuiccCertificateInvalid),
            ChainStatus::Valid(_) => {}
        }
        let signed = &req.euicc_signed1;
        if !verify(&cert.subject_public_key, &signed.to_tlv(), &req.euicc_signature1) {
            return Err(E::EuiccSignatureInvalid);
        }
        // The echoed values are covered by the signature just checked, so a
        // mismatch means the eUICC signed for another session.
        if signed.server_challenge != session.server_challenge
            || signed.transaction_id != txid
            || signed.server_address != self.address
        {
            self.events.push(format!("{txid}: serverChallenge mismatch"));
            return Err(E::EuiccSignatureInvalid);
        }
        if signed.euicc_info2.info1() != session.euicc_info1 {
            return Err(E::EuiccRspCapabilityHasChanged);
        }
        let ctx = &signed.ctx_params1;
        if ctx.device_info.device_capabilities != session.lpa_capability {
            return Err(E::LpaRspCapabilityHasChanged);
        }

        let eid = Eid::of(&cert.subject_public_key);
        let matching_id = self.find_order(&ctx.matching_id, &eid).ok_or(E::MatchingIdRefused)?;
        let order = self.orders.get_mut(&matching_id).expect("found above");
        if order.eid.is_some_and(|linked| linked != eid) {
            return Err(E::EidMismatch);
        }
        let state_before = order.state;
        order.download_attempts += 1;
        if order.download_attempts > order.max_attempts {
            order.transition(OrderState::Error);
            let note = failed_note(order, "maximum download attempts exceeded");
            self.operator_log.push(note);
            return Err(E::MatchingIdRefused);
        }
        if let Some(eligible) = &self.eligibility {
            if !eligible(&ctx.device_info, &signed.euicc_info2) {
                order.transition(OrderState::Error);
                return Err(E::NoEligibleProfile);
            }
        }

        let bpp_euicc_otpk = order
            .bound_bpp
            .as_ref()
            .filter(|b| b.eid == eid)
            .map(|b| b.euicc_otpk);
        let smdp_signed2 = SmdpSigned2 {
            transaction_id: txid,
            cc_required_flag: order.cc_required,
            bpp_euicc_otpk,
            rpm_pending: order.rpm_pending,
        };
        let smdp_signature2 = self.dppb.keys.sign(&smdp_signed2.to_tlv());
        let profile_metadata = order.metadata.clone();

        let session = self.sessions.get_mut(&txid).expect("checked");
        session.stage = SessionStage::ClientAuthenticated;
        session.euicc_cert = Some(cert.clone());
        session.eid = Some(eid);
        session.matching_id = Some(matching_id);
        session.state_before = Some(state_before);
        Ok(AuthenticateClientOk {
            transaction_id: txid,
            profile_metadata,
            smdp_signed2,
            smdp_signature2,
            smdp_certificate: self.dppb.cert.clone(),
        })
    }

    /// An empty matching id selects the pending order linked to the EID.
    fn find_order(&self, matching_id: &str, eid: &Eid) -> Option<String> {
        let order = if matching_id.is_empty() {
            self.orders
                .values()
                .find(|o| o.eid == Some(*eid) && o.state.is_downloadable())?
        } else {
            self.orders.get(matching_id)?
        };
        (order.state.is_downloadable() && !order.expired).then(|| order.matching_id.clone())
    }

    pub fn get_bound_profile_package(
        &mut self,
        req: &GetBoundProfilePackageRequest,
    ) -> Reply<GetBoundProfilePackageOk, GetBppErrorCode> {
        use GetBppErrorCode as E;
        let txid = req.transaction_id;
        let session = match self.sessions.get(&txid) {
            Some(s) if s.stage == SessionStage::ClientAuthenticated => s.clone(),
            _ => return Err(E::InvalidTransactionId),
        };
        let ok = match &req.prepare_download_response {
            PrepareDownloadResponse::Ok(ok) => ok,
            PrepareDownloadResponse::Error(_) => return Err(E::UndefinedError),
        };
        if ok.euicc_signed2.transaction_id != txid {
            return Err(E::InvalidTransactionId);
        }
        let euicc_cert = session.euicc_cert.clone().expect("set at client authentication");
        if !verify(&euicc_cert.subject_public_key, &ok.euicc_signed2.to_tlv(), &ok.euicc_signature2) {
            return Err(E::EuiccSignatureInvalid);
        }
        let matching_id = session.matching_id.clone().expect("set at client authentication");
        let eid = session.eid.expect("set at client authentication");
        let limit = self.cc_retry_limit;
        let now = self.store.now();
        let order = self.orders.get_mut(&matching_id).expect("orders are never removed");
        if order.is_expired_at(now) {
            order.transition(OrderState::Error);
            return Err(E::DownloadOrderExpired);
        }
        if order.cc_required {
            let Some(hash_cc) = ok.euicc_signed2.hash_cc else {
                return Err(E::ConfirmationCodeMissing);
            };
            let code = order.confirmation_code.as_deref().unwrap_or_default();
            if compute_hash_cc(code, &txid).ok() != Some(hash_cc) {
                order.cc_failures += 1;
                if order.cc_failures >= limit {
                    order.transition(OrderState::Error);
                    return Err(E::ConfirmationCodeRetriesExceeded);
                }
                return Err(E::ConfirmationCodeRefused);
            }
        }

        let euicc_otpk = ok.euicc_signed2.euicc_otpk;
        let (decision, bound) = match order.bound_bpp.clone() {
            Some(b) if b.eid == eid && b.euicc_otpk == euicc_otpk => (BppDecision::Reuse, b),
            Some(b) if b.eid == eid => (BppDecision::Rebind, self.bind(&matching_id, eid, txid, euicc_otpk)?),
            _ => (BppDecision::Create, self.bind(&matching_id, eid, txid, euicc_otpk)?),
        };
        let order = self.orders.get_mut(&matching_id).expect("orders are never removed");
        order.transition(OrderState::Downloaded);
        order.bound_bpp = Some(bound.clone());
        self.bpp_log.push(BppLogEntry {
            matching_id: matching_id.clone(),
            transaction_id: txid,
            decision,
        });
        self.bindings.insert(
            bound.transaction_id,
            Binding {
                matching_id,
                euicc_cert,
            },
        );
        self.sessions.get_mut(&txid).expect("checked").stage = SessionStage::BppIssued;
        Ok(GetBoundProfilePackageOk {
            transaction_id: txid,
            bound_profile_package: bound.bpp,
        })
    }

    /// Seals the order's profile for one eUICC one-time key. The plaintext
    /// is the same every time; only the key agreement and MACs change.
    fn bind(
        &mut self,
        matching_id: &str,
        eid: Eid,
        txid: TransactionId,
        euicc_otpk: [u8; 32],
    ) -> Reply<BoundBpp, GetBppErrorCode> {
        let order = &self.orders[matching_id];
        let ot = OtKeyPair::generate(&mut self.rng);
        let shared = ot.agree(&euicc_otpk).ok_or(GetBppErrorCode::UndefinedError)?;
        let key = session_key(&shared, &txid);
        let isc_signed = IscSignedData {
            transaction_id: txid,
            smdp_otpk: *ot.public(),
            euicc_otpk,
        };
        let initialise_secure_channel = InitialiseSecureChannel {
            transaction_id: txid,
            smdp_otpk: *ot.public(),
            smdp_signature: self.dppb.keys.sign(&isc_signed.to_tlv()),
        };
        let elements = profile_elements(&order.iccid);
        let chunks: Vec<&[u8]> = elements.chunks(MAX_SEGMENT_PAYLOAD).collect();
        let config = IsdpConfig {
            iccid: order.iccid,
            element_segments: chunks.len() as u16,
        };
        let bpp = BoundProfilePackage {
            initialise_secure_channel,
            configure_isdp: seal(&key, txid, BppCommandId::ConfigureIsdp, 0, config.to_tlv()),
            store_metadata: seal(&key, txid, BppCommandId::StoreMetadata, 0, order.metadata.to_tlv()),
            load_profile_elements: chunks
                .iter()
                .enumerate()
                .map(|(i, c)| seal(&key, txid, BppCommandId::LoadProfileElements, i as u16, c.to_vec()))
                .collect(),
        };
        Ok(BoundBpp {
            eid,
            euicc_otpk,
            transaction_id: txid,
            bpp,
        })
    }

    pub fn handle_notification(&mut self, req: &HandleNotificationRequest) -> Reply<(), HandleNotificationErrorCode> {
        let pir = &req.pending_notification;
        let txid = pir.transaction_id();
        let Some(binding) = self.bindings.get(&txid) else {
            // Unknown transaction: processing ends here.
            return Ok(());
        };
        let data = &pir.profile_installation_result_data;
        if !verify(&binding.euicc_cert.subject_public_key, &data.to_tlv(), &pir.euicc_sign_pir) {
            return Err(HandleNotificationErrorCode::EuiccSignatureInvalid);
        }
        let binding = self.bindings.remove(&txid).expect("checked");
        for session in self.sessions.values_mut() {
            if session.matching_id.as_deref() == Some(binding.matching_id.as_str()) {
                session.stage = SessionStage::Closed;
            }
        }
        let order = self.orders.get_mut(&binding.matching_id).expect("orders are never removed");
        let note = match &data.final_result {
            FinalResult::Success(_) => {
                order.transition(OrderState::Installed);
                Es2Notification {
                    notification_event: EVENT_BPP_INSTALLATION.into(),
                    notification_event_status: STATUS_SUCCESS.into(),
                    notification_receiver_identifier: order.iccid.to_string(),
                    notification_identifier: order.matching_id.clone(),
                    detail: None,
                }
            }
            FinalResult::Error(e) => {
                order.transition(OrderState::Error);
                failed_note(
                    order,
                    format!("{} failed: {}", e.bpp_command_id.name(), e.error_reason),
                )
            }
        };
        self.operator_log.push(note);
        if order.smds_event {
            let id = order.matching_id.clone();
            self.delete_ds_event(&id);
        }
        Ok(())
    }

    /// Stub of the SM-DS event deletion; only records the request.
    pub fn delete_ds_event(&mut self, matching_id: &str) {
        self.ds_events.push(matching_id.to_string());
    }

    pub fn cancel_session(&mut self, req: &Es9CancelSessionRequest) -> Reply<(), CancelSessionErrorCode> {
        let txid = req.transaction_id;
        let session = match self.sessions.get(&txid) {
            Some(s) if s.stage < SessionStage::Closed => s.clone(),
            _ => return Err(CancelSessionErrorCode::InvalidTransactionId),
        };
        let signed = &req.cancel_session_response.euicc_cancel_session_signed;
        if signed.transaction_id != txid {
            return Err(CancelSessionErrorCode::InvalidTransactionId);
        }
        let Some(cert) = &session.euicc_cert else {
            return Err(CancelSessionErrorCode::UndefinedError);
        };
        let signature = &req.cancel_session_response.euicc_cancel_session_signature;
        if !verify(&cert.subject_public_key, &signed.to_tlv(), signature) {
            return Err(CancelSessionErrorCode::UndefinedError);
        }
        self.sessions.get_mut(&txid).expect("checked").stage = SessionStage::Closed;
        self.bindings.retain(|t, _| *t != txid);
        if let (Some(id), Some(before)) = (&session.matching_id, session.state_before) {
            let order = self.orders.get_mut(id).expect("orders are never removed");
            if signed.reason == CancelSessionReason::EndUserRejection {
                order.transition(OrderState::Error);
            } else {
                order.roll_back(before);
            }
            let note = Es2Notification {
                notification_event: EVENT_DOWNLOAD_CANCELLED.into(),
                notification_event_status: STATUS_SUCCESS.into(),
                notification_receiver_identifier: order.iccid.to_string(),
                notification_identifier: order.matching_id.clone(),
                detail: Some(signed.reason.name().into()),
            };
            self.operator_log.push(note);
        }
        Ok(())
    }

    pub fn dispatch(&mut self, request: &Es9Request) -> Es9Reply {
        let function = request.function();
        let fail = |code: u8| Es9Reply::failed(function, code);
        match request {
            Es9Request::InitiateAuthentication(r) => match self.initiate_authentication(r) {
                Ok(ok) => Es9Reply::Ok(Es9Ok::InitiateAuthentication(ok)),
                Err(e) => fail(e.code()),
            },
            Es9Request::AuthenticateClient(r) => match self.authenticate_client(r) {
                Ok(ok) => Es9Reply::Ok(Es9Ok::AuthenticateClient(ok)),
                Err(e) => fail(e.code()),
            },
            Es9Request::GetBoundProfilePackage(r) => match self.get_bound_profile_package(r) {
                Ok(ok) => Es9Reply::Ok(Es9Ok::GetBoundProfilePackage(ok)),
                Err(e) => fail(e.code()),
            },
            Es9Request::HandleNotification(r) => match self.handle_notification(r) {
                Ok(()) => Es9Reply::Ok(Es9Ok::Ack),
                Err(e) => fail(e.code()),
            },
            Es9Request::CancelSession(r) => match self.cancel_session(r) {
                Ok(()) => Es9Reply::Ok(Es9Ok::Ack),
                Err(e) => fail(e.code()),
            },
        }
    }
}

fn failed_note(order: &ProfileOrder, detail: impl Into<String>) -> Es2Notification {
    Es2Notification {
        notification_event: EVENT_BPP_INSTALLATION.into(),
        notification_event_status: STATUS_FAILED.into(),
        notification_receiver_identifier: order.iccid.to_string(),
        notification_identifier: order.matching_id.clone(),
        detail: Some(detail.into()),
    }
}

impl Actor for Smdp {
    fn address(&self) -> &str {
        &self.address
    }

    fn handle(&mut self, _net: &Transport, request: &Envelope) -> Envelope {
        let format = request.format;
        let Some(function) = request.endpoint().and_then(Es9Function::from_endpoint) else {
            return Envelope::response(format, undefined_error(), Vec::new());
        };
        match Es9Request::decode(function, format, &request.body) {
            Ok(req) => {
                let reply = self.dispatch(&req);
                Envelope::response(format, reply.status(), reply.body(format))
            }
            Err(_) => Envelope::response(format, invalid_input(), Vec::new()),
        }
    }
}
