//! Codec property checks runnable outside the proptest macros, with a fixed
//! seed so every run sees the same values.

use std::collections::HashMap;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use super::gen::*;
use rsplab_core::messages::*;
use rsplab_core::pki::{Certificate, Crl};
use rsplab_core::tlv::TlvCodec;

pub type Check = fn(u32) -> Result<(), String>;

fn seeded(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[11; 32]))
}

fn check<T, S>(cases: u32, strategy: S) -> Result<(), String>
where
    T: TlvCodec + PartialEq + std::fmt::Debug,
    S: Strategy<Value = T>,
{
    seeded(cases)
        .run(&strategy, |value| {
            let bytes = value.to_tlv();
            prop_assert_eq!(bytes[0], T::TAG);
            let back = T::from_tlv(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(back, value);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

macro_rules! suite {
    ($($t:ty = $strategy:expr;)*) => {
        /// One decode-after-encode check per message type.
        pub fn suite() -> Vec<(&'static str, Check)> {
            vec![$((stringify!($t), |cases| check::<$t, _>(cases, $strategy))),*]
        }
    };
}

suite! {
    Certificate = certificate();
    Crl = crl();
    EuiccInfo1 = euicc_info1();
    EuiccInfo2 = euicc_info2();
    ServerSigned1 = server_signed1();
    DeviceInfo = device_info();
    CtxParams1 = ctx_params1();
    EuiccSigned1 = euicc_signed1();
    GetEuiccChallengeResponse = get_euicc_challenge_response();
    AuthenticateServerRequest = authenticate_server_request();
    AuthenticateServerResponse = authenticate_server_response();
    SmdpSigned2 = smdp_signed2();
    EuiccSigned2 = euicc_signed2();
    ProfileMetadata = profile_metadata();
    InitialiseSecureChannel = initialise_secure_channel();
    IscSignedData = isc_signed_data();
    SealedSegment = sealed_segment();
    SegmentMacData = segment_mac_data();
    BoundProfilePackage = bound_profile_package();
    IsdpConfig = isdp_config();
    NotificationMetadata = notification_metadata();
    FinalResult = final_result();
    ProfileInstallationResultData = pir_data();
    ProfileInstallationResult = pir();
    CancelSessionRequest = cancel_session_request();
    EuiccCancelSessionSigned = cancel_session_signed();
    CancelSessionResponse = cancel_session_response();
    EimConfigurationData = eim_configuration_data();
    EimOperation = eim_operation();
    SignedEimOperation = signed_eim_operation();
    EimConfigRequest = eim_config_request();
    EimConfigResult = eim_config_result();
    PrepareDownloadRequest = prepare_download_request();
    PrepareDownloadResponse = prepare_download_response();
    BppCommand = bpp_command();
    LoadBppResponse = load_bpp_response();
    Rat = rat();
    ProfileInfoList = profile_info_list();
    RemoveNotificationRequest = remove_notification_request();
    RemoveNotificationResponse = remove_notification_response();
    FunctionStatus = function_status();
    InitiateAuthenticationRequest = initiate_authentication_request();
    InitiateAuthenticationOk = initiate_authentication_ok();
    AuthenticateClientRequest = authenticate_client_request();
    AuthenticateClientOk = authenticate_client_ok();
    GetBoundProfilePackageRequest = get_bpp_request();
    GetBoundProfilePackageOk = get_bpp_ok();
    HandleNotificationRequest = handle_notification_request();
    Es9CancelSessionRequest = es9_cancel_session_request();
    FlowReport = flow_report();
    IpaInitiateDownload = ipa_initiate_download();
    PushActivationCode = push_activation_code();
    EsipaEimConfig = esipa_eim_config();
}

/// Any message, paired with a rendering that identifies the value.
fn any_message() -> impl Strategy<Value = (Vec<u8>, String)> {
    fn tagged<T: TlvCodec + std::fmt::Debug>(v: T) -> (Vec<u8>, String) {
        (v.to_tlv(), format!("{v:?}"))
    }
    prop_oneof![
        certificate().prop_map(tagged),
        crl().prop_map(tagged),
        server_signed1().prop_map(tagged),
        euicc_signed1().prop_map(tagged),
        smdp_signed2().prop_map(tagged),
        euicc_signed2().prop_map(tagged),
        profile_metadata().prop_map(tagged),
        sealed_segment().prop_map(tagged),
        pir().prop_map(tagged),
        cancel_session_signed().prop_map(tagged),
        eim_operation().prop_map(tagged),
        prepare_download_response().prop_map(tagged),
        authenticate_server_response().prop_map(tagged),
        flow_report().prop_map(tagged),
        rat().prop_map(tagged),
    ]
}

/// Generates values until `distinct` different encodings have been seen and
/// fails if two different values ever share one.
pub fn injectivity(distinct: usize) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]));
    let strategy = any_message();
    let mut seen: HashMap<Vec<u8>, String> = HashMap::new();
    while seen.len() < distinct {
        let (bytes, value) = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        match seen.get(&bytes) {
            Some(previous) if previous != &value => {
                return Err(format!("{previous} and {value} share one encoding"));
            }
            Some(_) => {}
            None => {
                seen.insert(bytes, value);
            }
        }
    }
    Ok(())
}
