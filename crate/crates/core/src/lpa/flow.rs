use crate::messages::es10_endpoint as ep;
use crate::messages::*;
use crate::pki::{verify, Certificate};
use crate::tlv::TlvCodec;
use crate::harness::Transport;

use super::{check_profile_rules, Consent, DownloadSource, Es10Client, Es10Error, LpaConfig, RulePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Download,
    AuthenticateOnly,
}

/// What the flow needs next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Send this to the SM-DP+ and resume with the reply.
    Call(Es9Request),
    Done(FlowReport),
}

#[derive(Debug, Clone)]
enum State {
    Idle,
    AwaitInitiate {
        info1: EuiccInfo1,
    },
    AwaitAuthClient {
        txid: TransactionId,
        euicc_cert: Certificate,
        euicc_capability: RspCapability,
    },
    AwaitBpp {
        txid: TransactionId,
        euicc_cert: Certificate,
        metadata: ProfileMetadata,
    },
    /// The eUICC refused PrepareDownload; its answer went to the SM-DP+.
    AwaitPrepareErrorAck {
        txid: TransactionId,
        code: DownloadErrorCode,
    },
    AwaitNotification {
        txid: TransactionId,
        pir: ProfileInstallationResult,
    },
    AwaitCancel {
        txid: TransactionId,
        reason: CancelSessionReason,
    },
    Finished,
}

/// One mutual authentication and (optionally) profile download, driven one
/// ES9+ exchange at a time.
#[derive(Debug, Clone)]
pub struct Flow {
    es10: Es10Client,
    config: LpaConfig,
    kind: FlowKind,
    smdp_address: String,
    matching_id: String,
    smdp_oid: Option<String>,
    /// The SM-DP+ announced a follow-up management session. It is noted in
    /// the report but never started.
    rpm_pending: bool,
    state: State,
}

fn es10_failure(stage: Stage, err: Es10Error) -> FlowReport {
    match err {
        Es10Error::Refused(FunctionStatus::Failed { reason_code, message }) => {
            FlowReport::error(stage, Some(reason_code), message)
        }
        other => FlowReport::error(stage, None, "es10Failure").with_detail(other.to_string()),
    }
}

impl Flow {
    pub fn new(es10: Es10Client, config: LpaConfig, source: DownloadSource, kind: FlowKind) -> Result<Self, FlowReport> {
        let (smdp_address, matching_id, smdp_oid) = match source {
            DownloadSource::ActivationCode(ac) => (ac.smdp_address, ac.matching_id, ac.oid),
            DownloadSource::Resolved {
                smdp_address,
                matching_id,
            } => (smdp_address, matching_id, None),
            DownloadSource::DefaultSmdp => match &config.default_smdp_address {
                Some(address) => (address.clone(), String::new(), None),
                None => {
                    return Err(FlowReport::error(Stage::ActivationCode, None, "noDefaultSmdpAddress"));
                }
            },
        };
        Ok(Flow {
            es10,
            config,
            kind,
            rpm_pending: false,
            smdp_address,
            matching_id,
            smdp_oid,
            state: State::Idle,
        })
    }

    pub fn smdp_address(&self) -> &str {
        &self.smdp_address
    }

    pub fn matching_id(&self) -> &str {
        &self.matching_id
    }

    /// Reads the eUICC and opens the session with the SM-DP+.
    pub fn start(&mut self, net: &Transport) -> Step {
        let info1: EuiccInfo1 = match self.es10.call(net, ep::GET_EUICC_INFO1, &Empty {}) {
            Ok(info) => info,
            Err(e) => return self.done(es10_failure(Stage::EuiccInfo, e)),
        };
        let challenge: GetEuiccChallengeResponse = match self.es10.call(net, ep::GET_EUICC_CHALLENGE, &Empty {}) {
            Ok(c) => c,
            Err(e) => return self.done(es10_failure(Stage::Challenge, e)),
        };
        let request = InitiateAuthenticationRequest {
            euicc_challenge: challenge.euicc_challenge,
            euicc_info1: info1.clone(),
            smdp_address: self.smdp_address.clone(),
            lpa_rsp_capability: self.config.capability,
        };
        self.state = State::AwaitInitiate { info1 };
        Step::Call(Es9Request::InitiateAuthentication(request))
    }

    /// Continues with the SM-DP+ reply to the last request. `Err` means the
    /// exchange itself failed.
    pub fn resume(&mut self, net: &Transport, reply: Result<Es9Reply, String>) -> Step {
        let state = std::mem::replace(&mut self.state, State::Finished);
        match state {
            State::Idle | State::Finished => self.done(FlowReport::error(Stage::Ipa, None, "flowNotRunning")),
            State::AwaitInitiate { info1 } => self.on_initiate(net, info1, reply),
            State::AwaitAuthClient {
                txid,
                euicc_cert,
                euicc_capability,
            } => self.on_authenticate_client(net, txid, euicc_cert, euicc_capability, reply),
            State::AwaitBpp {
                txid,
                euicc_cert,
                metadata,
            } => self.on_bpp(net, txid, euicc_cert, metadata, reply),
            State::AwaitPrepareErrorAck { txid, code } => self.done(
                FlowReport::error(Stage::PrepareDownload, Some(code.code()), code.name()).with_transaction(Some(txid)),
            ),
            State::AwaitNotification { txid, pir } => self.on_notification(net, txid, pir, reply),
            State::AwaitCancel { txid, reason } => {
                let mut report = FlowReport::cancelled(reason).with_transaction(Some(txid));
                match reply {
                    Ok(Es9Reply::Ok(_)) => {}
                    Ok(Es9Reply::Failed { reason_code, message }) => {
                        report = report.with_detail(format!("SM-DP+ cancelSession failed: {message}({reason_code})"))
                    }
                    Err(e) => report = report.with_detail(format!("SM-DP+ cancelSession failed: {e}")),
                }
                self.done(report)
            }
        }
    }

    fn done(&mut self, report: FlowReport) -> Step {
        self.state = State::Finished;
        Step::Done(report)
    }

    fn on_initiate(&mut self, net: &Transport, info1: EuiccInfo1, reply: Result<Es9Reply, String>) -> Step {
        let ok = match reply {
            Ok(Es9Reply::Ok(Es9Ok::InitiateAuthentication(ok))) => ok,
            other => return self.server_failure(net, Stage::InitiateAuth, other, None),
        };
        let txid = ok.transaction_id;
        let fail = |detail: &str| {
            FlowReport::error(Stage::InitiateAuth, None, "serverCheckFailed")
                .with_transaction(Some(txid))
                .with_detail(detail)
        };
        let signed = &ok.server_signed1;
        if signed.transaction_id != txid {
            return self.done(fail("transactionId differs from serverSigned1"));
        }
        if signed.server_address != self.smdp_address {
            return self.done(fail("serverAddress differs from the requested SM-DP+"));
        }
        if let Some(oid) = &self.smdp_oid {
            if ok.server_certificate.oid.as_ref() != Some(oid) {
                return self.done(fail("server certificate OID differs from the activation code"));
            }
        }
        if let Some(root) = &self.config.allowed_root {
            let top = ok.other_certs_in_chain.last().unwrap_or(&ok.server_certificate);
            if &top.authority_key_id != root || &ok.euicc_ci_pkid_to_be_used != root {
                return self.done(fail("server does not chain to the allowed root"));
            }
        }
        if self.config.time_check_enabled {
            let now = net.clock().now();
            if std::iter::once(&ok.server_certificate)
                .chain(&ok.other_certs_in_chain)
                .any(|c| !c.valid_at(now))
            {
                return self.done(fail("server certificate outside its validity period"));
            }
        }

        let ctx_params1 = CtxParams1 {
            matching_id: self.matching_id.clone(),
            device_info: DeviceInfo {
                tac: self.config.tac.clone(),
                device_capabilities: self.config.capability,
            },
            operation_type: OperationType::ProfileDownload,
        };
        let request = AuthenticateServerRequest {
            server_signed1: ok.server_signed1.clone(),
            server_signature1: ok.server_signature1,
            euicc_ci_pkid_to_be_used: ok.euicc_ci_pkid_to_be_used,
            server_certificate: ok.server_certificate.clone(),
            ctx_params1: ctx_params1.clone(),
            other_certs_in_chain: ok.other_certs_in_chain.clone(),
            crl_list: ok.crl_list.clone(),
            crl_stapling_used: info1.euicc_rsp_capability.contains(RspCapability::CRL_STAPLING_V3_SUPPORT),
        };
        let response: AuthenticateServerResponse = match self.es10.call(net, ep::AUTHENTICATE_SERVER, &request) {
            Ok(r) => r,
            Err(e) => return self.done(es10_failure(Stage::AuthenticateServer, e).with_transaction(Some(txid))),
        };
        let auth = match response {
            AuthenticateServerResponse::Ok(auth) => auth,
            AuthenticateServerResponse::Error(e) => {
                let code = e.authenticate_error_code;
                return self.done(
                    FlowReport::error(Stage::AuthenticateServer, Some(code.code()), code.name())
                        .with_transaction(Some(txid)),
                );
            }
        };
        let echo = &auth.euicc_signed1;
        if echo.ctx_params1 != ctx_params1
            || echo.server_challenge != signed.server_challenge
            || echo.transaction_id != txid
        {
            return self.cancel_locally(net, txid, CancelSessionReason::SessionAborted, |r| {
                r.with_detail("eUICC response does not echo the session")
            });
        }
        let euicc_capability = echo.euicc_info2.euicc_rsp_capability;
        let euicc_cert = auth.euicc_certificate.clone();
        self.state = State::AwaitAuthClient {
            txid,
            euicc_cert,
            euicc_capability,
        };
        Step::Call(Es9Request::AuthenticateClient(AuthenticateClientRequest {
            transaction_id: txid,
            euicc_signed1: auth.euicc_signed1,
            euicc_signature1: auth.euicc_signature1,
            euicc_certificate: auth.euicc_certificate,
            next_cert_in_chain: auth.next_cert_in_chain,
            other_certs_in_chain: auth.other_certs_in_chain,
        }))
    }

    fn on_authenticate_client(
        &mut self,
        net: &Transport,
        txid: TransactionId,
        euicc_cert: Certificate,
        euicc_capability: RspCapability,
        reply: Result<Es9Reply, String>,
    ) -> Step {
        let ok = match reply {
            Ok(Es9Reply::Ok(Es9Ok::AuthenticateClient(ok))) if ok.transaction_id == txid => ok,
            other => return self.server_failure(net, Stage::AuthenticateClient, other, Some(txid)),
        };
        if self.kind == FlowKind::AuthenticateOnly {
            return self.done(FlowReport::new(Outcome::Authenticated).with_transaction(Some(txid)));
        }
        let metadata = ok.profile_metadata.clone();

        if let Err(reason) = self.check_rules(net, &metadata, euicc_capability) {
            return self.cancel(net, txid, reason);
        }
        match (self.config.consent)(&metadata) {
            Consent::Accept => {}
            Consent::Reject => return self.cancel(net, txid, CancelSessionReason::EndUserRejection),
            Consent::Postpone => return self.cancel(net, txid, CancelSessionReason::Postponed),
        }

        self.rpm_pending = ok.smdp_signed2.rpm_pending;
        let hash_cc = match (&self.config.confirmation_code, ok.smdp_signed2.cc_required_flag) {
            (Some(code), true) => compute_hash_cc(code, &txid).ok(),
            _ => None,
        };
        let request = PrepareDownloadRequest {
            smdp_signed2: ok.smdp_signed2,
            smdp_signature2: ok.smdp_signature2,
            hash_cc,
            smdp_certificate: ok.smdp_certificate,
        };
        let response: PrepareDownloadResponse = match self.es10.call(net, ep::PREPARE_DOWNLOAD, &request) {
            Ok(r) => r,
            Err(e) => return self.done(es10_failure(Stage::PrepareDownload, e).with_transaction(Some(txid))),
        };
        self.state = match &response {
            PrepareDownloadResponse::Ok(_) => State::AwaitBpp {
                txid,
                euicc_cert,
                metadata,
            },
            PrepareDownloadResponse::Error(e) => State::AwaitPrepareErrorAck {
                txid,
                code: e.download_error_code,
            },
        };
        Step::Call(Es9Request::GetBoundProfilePackage(GetBoundProfilePackageRequest {
            transaction_id: txid,
            prepare_download_response: response,
        }))
    }

    fn check_rules(
        &self,
        net: &Transport,
        metadata: &ProfileMetadata,
        euicc_capability: RspCapability,
    ) -> Result<(), CancelSessionReason> {
        let policy = RulePolicy {
            enforce_profile_rules: self.config.enforce_profile_rules,
            lpr_supported: self.config.lpr_supported,
            empty_name_cancel: self.config.capability.contains(RspCapability::CANCEL_FOR_EMPTY_SPN_PN_SUPPORT)
                && euicc_capability.contains(RspCapability::CANCEL_FOR_EMPTY_SPN_PN_SUPPORT),
        };
        let (rat, installed) = if policy.enforce_profile_rules && !metadata.pprs.is_empty() {
            let rat: Option<Rat> = self.es10.call(net, ep::GET_RAT, &Empty {}).ok();
            let installed: ProfileInfoList = self
                .es10
                .call(net, ep::GET_PROFILES_INFO, &Empty {})
                .unwrap_or(ProfileInfoList { profiles: Vec::new() });
            (rat, installed.profiles)
        } else {
            (None, Vec::new())
        };
        check_profile_rules(metadata, rat.as_ref(), &installed, &policy)
    }

    fn on_bpp(
        &mut self,
        net: &Transport,
        txid: TransactionId,
        euicc_cert: Certificate,
        metadata: ProfileMetadata,
        reply: Result<Es9Reply, String>,
    ) -> Step {
        let ok = match reply {
            Ok(Es9Reply::Ok(Es9Ok::GetBoundProfilePackage(ok))) if ok.transaction_id == txid => ok,
            other => return self.server_failure(net, Stage::GetBpp, other, Some(txid)),
        };
        let bpp = ok.bound_profile_package;
        let stored = ProfileMetadata::from_tlv(&bpp.store_metadata.payload);
        if stored.as_ref() != Ok(&metadata) {
            return self.cancel(net, txid, CancelSessionReason::MetadataMismatch);
        }

        let isc_txid = bpp.initialise_secure_channel.transaction_id;
        let mut result = None;
        for command in bpp.commands() {
            match self.es10.call::<_, LoadBppResponse>(net, ep::LOAD_BPP, &command) {
                Ok(LoadBppResponse::Ack(())) => {}
                Ok(LoadBppResponse::Result(pir)) => {
                    result = Some(pir);
                    break;
                }
                Err(e) => return self.done(es10_failure(Stage::LoadBpp, e).with_transaction(Some(txid))),
            }
        }
        let Some(pir) = result else {
            return self.done(
                FlowReport::error(Stage::LoadBpp, None, "noInstallationResult").with_transaction(Some(txid)),
            );
        };
        let data = &pir.profile_installation_result_data;
        if !verify(&euicc_cert.subject_public_key, &data.to_tlv(), &pir.euicc_sign_pir) || data.transaction_id != isc_txid {
            return self.done(
                FlowReport::error(Stage::LoadBpp, None, "invalidInstallationResult").with_transaction(Some(txid)),
            );
        }
        self.state = State::AwaitNotification { txid, pir: pir.clone() };
        Step::Call(Es9Request::HandleNotification(HandleNotificationRequest {
            pending_notification: pir,
        }))
    }

    fn on_notification(
        &mut self,
        net: &Transport,
        txid: TransactionId,
        pir: ProfileInstallationResult,
        reply: Result<Es9Reply, String>,
    ) -> Step {
        match reply {
            Ok(Es9Reply::Ok(Es9Ok::Ack)) => {}
            other => return self.server_failure(net, Stage::HandleNotification, other, Some(txid)),
        }
        let request = RemoveNotificationRequest {
            seq_number: pir.seq_number(),
        };
        match self.es10.call::<_, RemoveNotificationResponse>(net, ep::REMOVE_NOTIFICATION, &request) {
            Ok(r) if r.status == RemoveNotificationStatus::Ok => {}
            Ok(r) => {
                return self.done(
                    FlowReport::error(Stage::RemoveNotification, Some(r.status.code()), r.status.name())
                        .with_transaction(Some(txid)),
                )
            }
            Err(e) => return self.done(es10_failure(Stage::RemoveNotification, e).with_transaction(Some(txid))),
        }
        let report = match &pir.profile_installation_result_data.final_result {
            FinalResult::Success(_) if self.rpm_pending => {
                FlowReport::new(Outcome::Installed).with_detail("rpmPending: follow-up session not started")
            }
            FinalResult::Success(_) => FlowReport::new(Outcome::Installed),
            FinalResult::Error(e) => FlowReport::error(Stage::LoadBpp, Some(e.error_reason.code()), e.error_reason.name())
                .with_detail(format!("bppCommandId {}", e.bpp_command_id)),
        };
        self.done(report.with_transaction(Some(txid)))
    }

    /// A failed or malformed SM-DP+ reply. Once the eUICC holds a session it
    /// is told to abort; the server already knows about its own failure.
    fn server_failure(&mut self, net: &Transport, stage: Stage, reply: Result<Es9Reply, String>, txid: Option<TransactionId>) -> Step {
        let (code, name) = match reply {
            Ok(Es9Reply::Failed { reason_code, message }) => (Some(reason_code), message),
            Ok(_) => (None, "unexpectedResponse".to_string()),
            // The server may well have acted; leave both sessions for a retry.
            Err(e) => {
                return self.done(
                    FlowReport::error(stage, None, "transportFailure")
                        .with_transaction(txid)
                        .with_detail(e),
                )
            }
        };
        let with_peer = move |mut r: FlowReport| {
            r.stage = Some(stage);
            r.code = code;
            r.name = Some(name);
            r
        };
        match txid {
            Some(txid) if stage == Stage::AuthenticateClient || stage == Stage::GetBpp => {
                self.cancel_locally(net, txid, CancelSessionReason::SessionAborted, with_peer)
            }
            _ => self.done(with_peer(FlowReport::error(stage, None, "")).with_transaction(txid)),
        }
    }

    /// Cancels on the eUICC only and reports the flow cancelled.
    fn cancel_locally(
        &mut self,
        net: &Transport,
        txid: TransactionId,
        reason: CancelSessionReason,
        decorate: impl FnOnce(FlowReport) -> FlowReport,
    ) -> Step {
        let request = CancelSessionRequest {
            transaction_id: txid,
            reason,
        };
        let mut report = decorate(FlowReport::cancelled(reason).with_transaction(Some(txid)));
        if let Err(e) = self.es10.call::<_, CancelSessionResponse>(net, ep::CANCEL_SESSION, &request) {
            report = report.with_detail(format!("eUICC cancelSession failed: {e}"));
        }
        self.done(report)
    }

    /// The common cancel session procedure: the eUICC signs the reason and
    /// the signed answer goes to the SM-DP+.
    fn cancel(&mut self, net: &Transport, txid: TransactionId, reason: CancelSessionReason) -> Step {
        let request = CancelSessionRequest {
            transaction_id: txid,
            reason,
        };
        let response: Result<CancelSessionResponse, _> = self.es10.call(net, ep::CANCEL_SESSION, &request);
        match response {
            Ok(CancelSessionResponse::Ok(ok)) => {
                self.state = State::AwaitCancel { txid, reason };
                Step::Call(Es9Request::CancelSession(Es9CancelSessionRequest {
                    transaction_id: txid,
                    cancel_session_response: ok,
                }))
            }
            Ok(CancelSessionResponse::Error(code)) => self.done(
                FlowReport::cancelled(reason)
                    .with_peer_code(Stage::CancelSession, code.code(), code.name())
                    .with_transaction(Some(txid)),
            ),
            Err(e) => self.done(
                FlowReport::cancelled(reason)
                    .with_transaction(Some(txid))
                    .with_detail(format!("eUICC cancelSession failed: {e}")),
            ),
        }
    }
}
