//! Proptest strategies for every message type.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::select;

use rsplab_core::messages::*;
use rsplab_core::pki::{Certificate, Crl, PublicKeyId, Role, Signature};

pub fn bytes<const N: usize>() -> impl Strategy<Value = [u8; N]> {
    prop::collection::vec(any::<u8>(), N).prop_map(|v| v.try_into().expect("length N"))
}

pub fn sig() -> impl Strategy<Value = Signature> {
    bytes::<64>()
}

pub fn blob() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(any::<u8>(), 0..48)
}

pub fn text() -> impl Strategy<Value = String> {
    "\\PC{0,12}"
}

pub fn pkid() -> impl Strategy<Value = PublicKeyId> {
    bytes::<20>().prop_map(PublicKeyId)
}

pub fn pkids() -> impl Strategy<Value = Vec<PublicKeyId>> {
    prop::collection::vec(pkid(), 0..3)
}

pub fn txid() -> impl Strategy<Value = TransactionId> {
    bytes::<16>().prop_map(TransactionId)
}

pub fn iccid() -> impl Strategy<Value = Iccid> {
    "[0-9]{18,20}".prop_map(|d| Iccid::from_digits(&d).expect("valid digits"))
}

pub fn capability() -> impl Strategy<Value = RspCapability> {
    (0u8..8).prop_map(|b| RspCapability::from_bits(b).expect("known bits"))
}

pub fn pprs() -> impl Strategy<Value = Pprs> {
    (0u8..4).prop_map(|b| Pprs::from_bits(b).expect("known bits"))
}

macro_rules! enum_strategy {
    ($($f:ident: $t:ty),* $(,)?) => {
        $(pub fn $f() -> impl Strategy<Value = $t> { select(<$t>::ALL.to_vec()) })*
    };
}

enum_strategy! {
    role: Role,
    auth_error: AuthenticateErrorCode,
    cancel_reason: CancelSessionReason,
    cancel_error: CancelSessionErrorCode,
    download_error: DownloadErrorCode,
    command_id: BppCommandId,
    error_reason: ErrorReason,
    operation_type: OperationType,
    remove_status: RemoveNotificationStatus,
    eim_status: EimConfigStatus,
    eim_kind: EimOperationKind,
    outcome: Outcome,
    stage: Stage,
}

pub fn certificate() -> impl Strategy<Value = Certificate> {
    (
        any::<u64>(),
        text(),
        role(),
        bytes::<32>(),
        pkid(),
        pkid(),
        any::<u64>(),
        any::<u64>(),
        prop::option::of("[0-9]{1,3}(\\.[0-9]{1,4}){0,4}"),
        any::<bool>(),
        sig(),
    )
        .prop_map(|(serial, subject_name, role, key, skid, akid, nb, na, oid, cdp, signature)| Certificate {
            serial,
            subject_name,
            role,
            subject_public_key: key,
            subject_key_id: skid,
            authority_key_id: akid,
            not_before: nb,
            not_after: na,
            oid,
            has_crl_distribution_point: cdp,
            signature,
        })
}

pub fn certificates() -> impl Strategy<Value = Vec<Certificate>> {
    prop::collection::vec(certificate(), 0..3)
}

pub fn crl() -> impl Strategy<Value = Crl> {
    (pkid(), any::<u64>(), any::<u64>(), prop::collection::btree_set(any::<u64>(), 0..5), sig()).prop_map(
        |(issuer_key_id, this_update, next_update, revoked_serials, signature)| Crl {
            issuer_key_id,
            this_update,
            next_update,
            revoked_serials: revoked_serials.into_iter().collect::<BTreeSet<_>>(),
            signature,
        },
    )
}

pub fn euicc_info1() -> impl Strategy<Value = EuiccInfo1> {
    (pkids(), pkids(), capability()).prop_map(|(v, s, c)| EuiccInfo1 {
        euicc_ci_pkid_list_for_verification: v,
        euicc_ci_pkid_list_for_signing: s,
        euicc_rsp_capability: c,
    })
}

pub fn euicc_info2() -> impl Strategy<Value = EuiccInfo2> {
    (euicc_info1(), bytes::<3>(), any::<u32>(), any::<u16>()).prop_map(|(i, svn, nvm, count)| EuiccInfo2 {
        euicc_ci_pkid_list_for_verification: i.euicc_ci_pkid_list_for_verification,
        euicc_ci_pkid_list_for_signing: i.euicc_ci_pkid_list_for_signing,
        euicc_rsp_capability: i.euicc_rsp_capability,
        svn,
        free_non_volatile_memory: nvm,
        installed_profile_count: count,
    })
}

pub fn server_signed1() -> impl Strategy<Value = ServerSigned1> {
    (txid(), bytes::<16>(), text(), bytes::<16>()).prop_map(|(t, ec, a, sc)| ServerSigned1 {
        transaction_id: t,
        euicc_challenge: ec,
        server_address: a,
        server_challenge: sc,
    })
}

pub fn device_info() -> impl Strategy<Value = DeviceInfo> {
    ("[0-9]{8}", capability()).prop_map(|(tac, c)| DeviceInfo { tac, device_capabilities: c })
}

pub fn ctx_params1() -> impl Strategy<Value = CtxParams1> {
    (text(), device_info(), operation_type()).prop_map(|(m, d, o)| CtxParams1 {
        matching_id: m,
        device_info: d,
        operation_type: o,
    })
}

pub fn euicc_signed1() -> impl Strategy<Value = EuiccSigned1> {
    (txid(), text(), bytes::<16>(), euicc_info2(), ctx_params1()).prop_map(|(t, a, sc, i, c)| EuiccSigned1 {
        transaction_id: t,
        server_address: a,
        server_challenge: sc,
        euicc_info2: i,
        ctx_params1: c,
    })
}

pub fn get_euicc_challenge_response() -> impl Strategy<Value = GetEuiccChallengeResponse> {
    bytes::<16>().prop_map(|c| GetEuiccChallengeResponse { euicc_challenge: c })
}

pub fn authenticate_server_request() -> impl Strategy<Value = AuthenticateServerRequest> {
    (
        server_signed1(),
        sig(),
        pkid(),
        certificate(),
        ctx_params1(),
        certificates(),
        prop::collection::vec(crl(), 0..2),
        any::<bool>(),
    )
        .prop_map(|(s, sig, id, cert, ctx, others, crls, stapled)| AuthenticateServerRequest {
            server_signed1: s,
            server_signature1: sig,
            euicc_ci_pkid_to_be_used: id,
            server_certificate: cert,
            ctx_params1: ctx,
            other_certs_in_chain: others,
            crl_list: crls,
            crl_stapling_used: stapled,
        })
}

pub fn authenticate_response_ok() -> impl Strategy<Value = AuthenticateResponseOk> {
    (euicc_signed1(), sig(), certificate(), certificate(), certificates()).prop_map(|(s, sig, c, n, o)| {
        AuthenticateResponseOk {
            euicc_signed1: s,
            euicc_signature1: sig,
            euicc_certificate: c,
            next_cert_in_chain: n,
            other_certs_in_chain: o,
        }
    })
}

pub fn authenticate_response_error() -> impl Strategy<Value = AuthenticateResponseError> {
    (txid(), auth_error()).prop_map(|(t, e)| AuthenticateResponseError {
        transaction_id: t,
        authenticate_error_code: e,
    })
}

pub fn authenticate_server_response() -> impl Strategy<Value = AuthenticateServerResponse> {
    prop_oneof![
        authenticate_response_ok().prop_map(AuthenticateServerResponse::Ok),
        authenticate_response_error().prop_map(AuthenticateServerResponse::Error),
    ]
}

pub fn smdp_signed2() -> impl Strategy<Value = SmdpSigned2> {
    (txid(), any::<bool>(), prop::option::of(bytes::<32>()), any::<bool>()).prop_map(|(t, cc, otpk, rpm)| {
        SmdpSigned2 {
            transaction_id: t,
            cc_required_flag: cc,
            bpp_euicc_otpk: otpk,
            rpm_pending: rpm,
        }
    })
}

pub fn euicc_signed2() -> impl Strategy<Value = EuiccSigned2> {
    (txid(), bytes::<32>(), prop::option::of(bytes::<32>())).prop_map(|(t, k, h)| EuiccSigned2 {
        transaction_id: t,
        euicc_otpk: k,
        hash_cc: h,
    })
}

pub fn profile_metadata() -> impl Strategy<Value = ProfileMetadata> {
    (iccid(), text(), text(), pprs(), any::<bool>()).prop_map(|(i, p, s, r, l)| ProfileMetadata {
        iccid: i,
        profile_name: p,
        service_provider_name: s,
        pprs: r,
        lpr_config_present: l,
    })
}

pub fn initialise_secure_channel() -> impl Strategy<Value = InitialiseSecureChannel> {
    (txid(), bytes::<32>(), sig()).prop_map(|(t, k, s)| InitialiseSecureChannel {
        transaction_id: t,
        smdp_otpk: k,
        smdp_signature: s,
    })
}

pub fn isc_signed_data() -> impl Strategy<Value = IscSignedData> {
    (txid(), bytes::<32>(), bytes::<32>()).prop_map(|(t, s, e)| IscSignedData {
        transaction_id: t,
        smdp_otpk: s,
        euicc_otpk: e,
    })
}

pub fn sealed_segment() -> impl Strategy<Value = SealedSegment> {
    (command_id(), any::<u16>(), blob(), bytes::<16>()).prop_map(|(c, i, p, m)| SealedSegment {
        command_id: c,
        index: i,
        payload: p,
        mac: m,
    })
}

pub fn segment_mac_data() -> impl Strategy<Value = SegmentMacData> {
    (txid(), command_id(), any::<u16>(), blob()).prop_map(|(t, c, i, p)| SegmentMacData {
        transaction_id: t,
        command_id: c,
        index: i,
        payload: p,
    })
}

pub fn bound_profile_package() -> impl Strategy<Value = BoundProfilePackage> {
    (
        initialise_secure_channel(),
        sealed_segment(),
        sealed_segment(),
        prop::collection::vec(sealed_segment(), 0..3),
    )
        .prop_map(|(isc, c, s, e)| BoundProfilePackage {
            initialise_secure_channel: isc,
            configure_isdp: c,
            store_metadata: s,
            load_profile_elements: e,
        })
}

pub fn isdp_config() -> impl Strategy<Value = IsdpConfig> {
    (iccid(), any::<u16>()).prop_map(|(i, n)| IsdpConfig { iccid: i, element_segments: n })
}

pub fn notification_metadata() -> impl Strategy<Value = NotificationMetadata> {
    (any::<u32>(), prop::option::of(iccid())).prop_map(|(s, i)| NotificationMetadata { seq_number: s, iccid: i })
}

pub fn final_result() -> impl Strategy<Value = FinalResult> {
    prop_oneof![
        (blob(), blob()).prop_map(|(aid, ppi)| FinalResult::Success(SuccessResult { aid, ppi_response: ppi })),
        (command_id(), error_reason(), prop::option::of(blob())).prop_map(|(c, r, p)| FinalResult::Error(
            ErrorResult {
                bpp_command_id: c,
                error_reason: r,
                ppi_response: p,
            }
        )),
    ]
}

pub fn pir_data() -> impl Strategy<Value = ProfileInstallationResultData> {
    (txid(), notification_metadata(), text(), final_result()).prop_map(|(t, n, o, f)| {
        ProfileInstallationResultData {
            transaction_id: t,
            notification_metadata: n,
            smdp_oid: o,
            final_result: f,
        }
    })
}

pub fn pir() -> impl Strategy<Value = ProfileInstallationResult> {
    (pir_data(), sig()).prop_map(|(d, s)| ProfileInstallationResult {
        profile_installation_result_data: d,
        euicc_sign_pir: s,
    })
}

pub fn cancel_session_request() -> impl Strategy<Value = CancelSessionRequest> {
    (txid(), cancel_reason()).prop_map(|(t, r)| CancelSessionRequest { transaction_id: t, reason: r })
}

pub fn cancel_session_signed() -> impl Strategy<Value = EuiccCancelSessionSigned> {
    (txid(), text(), cancel_reason()).prop_map(|(t, o, r)| EuiccCancelSessionSigned {
        transaction_id: t,
        smdp_oid: o,
        reason: r,
    })
}

pub fn cancel_session_ok() -> impl Strategy<Value = CancelSessionResponseOk> {
    (cancel_session_signed(), sig()).prop_map(|(s, sig)| CancelSessionResponseOk {
        euicc_cancel_session_signed: s,
        euicc_cancel_session_signature: sig,
    })
}

pub fn cancel_session_response() -> impl Strategy<Value = CancelSessionResponse> {
    prop_oneof![
        cancel_session_ok().prop_map(CancelSessionResponse::Ok),
        cancel_error().prop_map(CancelSessionResponse::Error),
    ]
}

pub fn eim_configuration_data() -> impl Strategy<Value = EimConfigurationData> {
    (text(), bytes::<32>(), text()).prop_map(|(id, k, a)| EimConfigurationData {
        eim_id: id,
        eim_public_key: k,
        eim_address: a,
    })
}

pub fn eim_operation() -> impl Strategy<Value = EimOperation> {
    (eim_kind(), text(), any::<u32>(), prop::option::of(eim_configuration_data())).prop_map(|(k, id, c, n)| {
        EimOperation {
            kind: k,
            eim_id: id,
            counter: c,
            new_config: n,
        }
    })
}

pub fn signed_eim_operation() -> impl Strategy<Value = SignedEimOperation> {
    (eim_operation(), sig()).prop_map(|(o, s)| SignedEimOperation { operation: o, signature: s })
}

pub fn eim_config_request() -> impl Strategy<Value = EimConfigRequest> {
    prop_oneof![
        eim_configuration_data().prop_map(EimConfigRequest::Add),
        signed_eim_operation().prop_map(EimConfigRequest::Signed),
        Just(EimConfigRequest::Remove(())),
    ]
}

pub fn eim_config_result() -> impl Strategy<Value = EimConfigResult> {
    (eim_status(), prop::option::of(text())).prop_map(|(s, id)| EimConfigResult { status: s, eim_id: id })
}

pub fn prepare_download_request() -> impl Strategy<Value = PrepareDownloadRequest> {
    (smdp_signed2(), sig(), prop::option::of(bytes::<32>()), certificate()).prop_map(|(s, sig, h, c)| {
        PrepareDownloadRequest {
            smdp_signed2: s,
            smdp_signature2: sig,
            hash_cc: h,
            smdp_certificate: c,
        }
    })
}

pub fn prepare_download_response() -> impl Strategy<Value = PrepareDownloadResponse> {
    prop_oneof![
        (euicc_signed2(), sig()).prop_map(|(s, sig)| PrepareDownloadResponse::Ok(PrepareDownloadResponseOk {
            euicc_signed2: s,
            euicc_signature2: sig,
        })),
        (txid(), download_error()).prop_map(|(t, e)| PrepareDownloadResponse::Error(
            PrepareDownloadResponseError {
                transaction_id: t,
                download_error_code: e,
            }
        )),
    ]
}

pub fn bpp_command() -> impl Strategy<Value = BppCommand> {
    prop_oneof![
        initialise_secure_channel().prop_map(BppCommand::InitialiseSecureChannel),
        sealed_segment().prop_map(BppCommand::Sealed),
    ]
}

pub fn load_bpp_response() -> impl Strategy<Value = LoadBppResponse> {
    prop_oneof![Just(LoadBppResponse::Ack(())), pir().prop_map(LoadBppResponse::Result)]
}

pub fn rat() -> impl Strategy<Value = Rat> {
    prop::collection::vec(pprs().prop_map(|p| RatRule { allowed_pprs: p }), 0..3).prop_map(|rules| Rat { rules })
}

pub fn profile_info_list() -> impl Strategy<Value = ProfileInfoList> {
    prop::collection::vec(
        (iccid(), text(), any::<bool>()).prop_map(|(i, n, e)| ProfileInfo {
            iccid: i,
            profile_name: n,
            enabled: e,
        }),
        0..3,
    )
    .prop_map(|profiles| ProfileInfoList { profiles })
}

pub fn remove_notification_request() -> impl Strategy<Value = RemoveNotificationRequest> {
    any::<u32>().prop_map(|s| RemoveNotificationRequest { seq_number: s })
}

pub fn remove_notification_response() -> impl Strategy<Value = RemoveNotificationResponse> {
    remove_status().prop_map(|s| RemoveNotificationResponse { status: s })
}

pub fn initiate_authentication_request() -> impl Strategy<Value = InitiateAuthenticationRequest> {
    (bytes::<16>(), euicc_info1(), text(), capability()).prop_map(|(c, i, a, cap)| InitiateAuthenticationRequest {
        euicc_challenge: c,
        euicc_info1: i,
        smdp_address: a,
        lpa_rsp_capability: cap,
    })
}

pub fn initiate_authentication_ok() -> impl Strategy<Value = InitiateAuthenticationOk> {
    (
        txid(),
        server_signed1(),
        sig(),
        pkid(),
        certificate(),
        certificates(),
        prop::collection::vec(crl(), 0..2),
    )
        .prop_map(|(t, s, sig, id, c, o, crls)| InitiateAuthenticationOk {
            transaction_id: t,
            server_signed1: s,
            server_signature1: sig,
            euicc_ci_pkid_to_be_used: id,
            server_certificate: c,
            other_certs_in_chain: o,
            crl_list: crls,
        })
}

pub fn authenticate_client_request() -> impl Strategy<Value = AuthenticateClientRequest> {
    (txid(), euicc_signed1(), sig(), certificate(), certificate(), certificates()).prop_map(
        |(t, s, sig, c, n, o)| AuthenticateClientRequest {
            transaction_id: t,
            euicc_signed1: s,
            euicc_signature1: sig,
            euicc_certificate: c,
            next_cert_in_chain: n,
            other_certs_in_chain: o,
        },
    )
}

pub fn authenticate_client_ok() -> impl Strategy<Value = AuthenticateClientOk> {
    (txid(), profile_metadata(), smdp_signed2(), sig(), certificate()).prop_map(|(t, m, s, sig, c)| {
        AuthenticateClientOk {
            transaction_id: t,
            profile_metadata: m,
            smdp_signed2: s,
            smdp_signature2: sig,
            smdp_certificate: c,
        }
    })
}

pub fn get_bpp_request() -> impl Strategy<Value = GetBoundProfilePackageRequest> {
    (txid(), prepare_download_response()).prop_map(|(t, r)| GetBoundProfilePackageRequest {
        transaction_id: t,
        prepare_download_response: r,
    })
}

pub fn get_bpp_ok() -> impl Strategy<Value = GetBoundProfilePackageOk> {
    (txid(), bound_profile_package()).prop_map(|(t, b)| GetBoundProfilePackageOk {
        transaction_id: t,
        bound_profile_package: b,
    })
}

pub fn handle_notification_request() -> impl Strategy<Value = HandleNotificationRequest> {
    pir().prop_map(|p| HandleNotificationRequest { pending_notification: p })
}

pub fn es9_cancel_session_request() -> impl Strategy<Value = Es9CancelSessionRequest> {
    (txid(), cancel_session_ok()).prop_map(|(t, c)| Es9CancelSessionRequest {
        transaction_id: t,
        cancel_session_response: c,
    })
}

pub fn es9_request() -> impl Strategy<Value = Es9Request> {
    prop_oneof![
        initiate_authentication_request().prop_map(Es9Request::InitiateAuthentication),
        authenticate_client_request().prop_map(Es9Request::AuthenticateClient),
        get_bpp_request().prop_map(Es9Request::GetBoundProfilePackage),
        handle_notification_request().prop_map(Es9Request::HandleNotification),
        es9_cancel_session_request().prop_map(Es9Request::CancelSession),
    ]
}

pub fn function_status() -> impl Strategy<Value = FunctionStatus> {
    prop_oneof![
        Just(FunctionStatus::Success),
        (any::<u8>(), text()).prop_map(|(c, m)| FunctionStatus::failed(c, m)),
    ]
}

pub fn flow_report() -> impl Strategy<Value = FlowReport> {
    (
        outcome(),
        prop::option::of(cancel_reason()),
        prop::option::of(stage()),
        prop::option::of(any::<u8>()),
        prop::option::of(text()),
        prop::option::of(txid()),
        text(),
        prop::option::of(text()),
    )
        .prop_map(|(o, r, s, c, n, t, tr, d)| FlowReport {
            outcome: o,
            reason: r,
            stage: s,
            code: c,
            name: n,
            transaction_id: t,
            transcript_ref: tr,
            detail: d,
        })
}

pub fn ipa_initiate_download() -> impl Strategy<Value = IpaInitiateDownload> {
    (text(), text()).prop_map(|(a, m)| IpaInitiateDownload {
        smdp_address: a,
        matching_id: m,
    })
}

pub fn push_activation_code() -> impl Strategy<Value = PushActivationCode> {
    text().prop_map(|a| PushActivationCode { activation_code: a })
}

pub fn esipa_eim_config() -> impl Strategy<Value = EsipaEimConfig> {
    eim_config_request().prop_map(|r| EsipaEimConfig { request: r })
}
