//! ES9+ request and response bodies, the function execution status header
//! and typed wrappers used by the LPA, the SM-DP+ and the eIM relay.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::pki::{Certificate, Crl, PublicKeyId, Signature};
use crate::tlv::{self, CodecError, Fields, TlvCodec, TlvWriter};

use super::json;
use super::{
    AuthenticateClientErrorCode, BoundProfilePackage, CancelSessionResponseOk, Challenge, Empty,
    EuiccInfo1, EuiccSigned1, GetBppErrorCode, HandleNotificationErrorCode, InitiateAuthErrorCode,
    PrepareDownloadResponse, ProfileInstallationResult, ProfileMetadata, RspCapability,
    ServerSigned1, SmdpSigned2, TransactionId, WireFormat,
};

wire_enum! {
    /// ES9+ functions, in session order.
    pub enum Es9Function {
        InitiateAuthentication = 0 => "initiateAuthentication",
        AuthenticateClient = 1 => "authenticateClient",
        GetBoundProfilePackage = 2 => "getBoundProfilePackage",
        HandleNotification = 3 => "handleNotification",
        CancelSession = 4 => "cancelSession",
    }
}

pub const ES9_PREFIX: &str = "/gsma/rsp2/es9plus/";

impl Es9Function {
    pub fn endpoint(self) -> String {
        format!("{ES9_PREFIX}{}", self.name())
    }

    pub fn from_endpoint(endpoint: &str) -> Option<Self> {
        endpoint.strip_prefix(ES9_PREFIX).and_then(Es9Function::from_name)
    }

    /// Name of the error code table used in a failed status.
    pub fn reason_name(self, code: u8) -> Option<&'static str> {
        match self {
            Es9Function::InitiateAuthentication => InitiateAuthErrorCode::from_code(code).map(|c| c.name()),
            Es9Function::AuthenticateClient => AuthenticateClientErrorCode::from_code(code).map(|c| c.name()),
            Es9Function::GetBoundProfilePackage => GetBppErrorCode::from_code(code).map(|c| c.name()),
            Es9Function::HandleNotification => HandleNotificationErrorCode::from_code(code).map(|c| c.name()),
            Es9Function::CancelSession => super::CancelSessionErrorCode::from_code(code).map(|c| c.name()),
        }
    }
}

/// `header.functionExecutionStatus` of every ES9+ and ESipa response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionStatus {
    Success,
    Failed { reason_code: u8, message: String },
}

const EXECUTED_SUCCESS: &str = "Executed-Success";
const FAILED: &str = "Failed";

impl FunctionStatus {
    pub fn failed(reason_code: u8, message: impl Into<String>) -> Self {
        FunctionStatus::Failed {
            reason_code,
            message: message.into(),
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, FunctionStatus::Success)
    }

    pub fn reason_code(&self) -> Option<u8> {
        match self {
            FunctionStatus::Success => None,
            FunctionStatus::Failed { reason_code, .. } => Some(*reason_code),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            FunctionStatus::Success => serde_json::json!({ "status": EXECUTED_SUCCESS }),
            FunctionStatus::Failed { reason_code, message } => serde_json::json!({
                "status": FAILED,
                "statusCodeData": { "reasonCode": reason_code, "message": message },
            }),
        }
    }

    pub fn from_json(value: &serde_json::Value) -> Option<Self> {
        let obj = value.as_object()?;
        match obj.get("status")?.as_str()? {
            EXECUTED_SUCCESS if obj.len() == 1 => Some(FunctionStatus::Success),
            FAILED if obj.len() == 2 => {
                let data = obj.get("statusCodeData")?.as_object()?;
                if data.len() != 2 {
                    return None;
                }
                let reason_code = u8::try_from(data.get("reasonCode")?.as_u64()?).ok()?;
                let message = data.get("message")?.as_str()?.to_string();
                Some(FunctionStatus::Failed { reason_code, message })
            }
            _ => None,
        }
    }
}

impl TlvCodec for FunctionStatus {
    const TAG: u8 = 0x6E;

    fn write_fields(&self, w: &mut TlvWriter) {
        match self {
            FunctionStatus::Success => w.field(0, &EXECUTED_SUCCESS.to_string()),
            FunctionStatus::Failed { reason_code, message } => {
                w.field(0, &FAILED.to_string());
                w.field(1, reason_code);
                w.field(2, message);
            }
        }
    }

    fn read_fields(f: &mut Fields<'_>) -> tlv::Result<Self> {
        let status: String = f.req(0)?;
        let code: Option<u8> = f.opt(1)?;
        let message: Option<String> = f.opt(2)?;
        match (status.as_str(), code, message) {
            (EXECUTED_SUCCESS, None, None) => Ok(FunctionStatus::Success),
            (FAILED, Some(reason_code), Some(message)) => Ok(FunctionStatus::Failed { reason_code, message }),
            _ => Err(CodecError::InvalidValue("FunctionStatus")),
        }
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct InitiateAuthenticationRequest: 0x60 {
        #[serde(with = "json::content")]
        0 req euicc_challenge: Challenge,
        #[serde(with = "json::tlv")]
        1 req euicc_info1: EuiccInfo1,
        2 req smdp_address: String,
        #[serde(with = "json::content")]
        3 req lpa_rsp_capability: RspCapability,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct InitiateAuthenticationOk: 0x61 {
        0 req transaction_id: TransactionId,
        #[serde(with = "json::tlv")]
        1 req server_signed1: ServerSigned1,
        #[serde(with = "json::content")]
        2 req server_signature1: Signature,
        #[serde(rename = "euiccCiPKIdToBeUsed", with = "json::key_id")]
        3 req euicc_ci_pkid_to_be_used: PublicKeyId,
        #[serde(with = "json::tlv")]
        4 req server_certificate: Certificate,
        #[serde(with = "json::tlv_list")]
        5 req other_certs_in_chain: Vec<Certificate>,
        #[serde(with = "json::tlv_list")]
        6 req crl_list: Vec<Crl>,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct AuthenticateClientRequest: 0x62 {
        0 req transaction_id: TransactionId,
        #[serde(with = "json::tlv")]
        1 req euicc_signed1: EuiccSigned1,
        #[serde(with = "json::content")]
        2 req euicc_signature1: Signature,
        #[serde(with = "json::tlv")]
        3 req euicc_certificate: Certificate,
        #[serde(with = "json::tlv")]
        4 req next_cert_in_chain: Certificate,
        #[serde(with = "json::tlv_list")]
        5 req other_certs_in_chain: Vec<Certificate>,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct AuthenticateClientOk: 0x63 {
        0 req transaction_id: TransactionId,
        #[serde(with = "json::tlv")]
        1 req profile_metadata: ProfileMetadata,
        #[serde(with = "json::tlv")]
        2 req smdp_signed2: SmdpSigned2,
        #[serde(with = "json::content")]
        3 req smdp_signature2: Signature,
        #[serde(with = "json::tlv")]
        4 req smdp_certificate: Certificate,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct GetBoundProfilePackageRequest: 0x64 {
        0 req transaction_id: TransactionId,
        #[serde(with = "json::tlv")]
        1 req prepare_download_response: PrepareDownloadResponse,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct GetBoundProfilePackageOk: 0x65 {
        0 req transaction_id: TransactionId,
        #[serde(with = "json::tlv")]
        1 req bound_profile_package: BoundProfilePackage,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct HandleNotificationRequest: 0x66 {
        #[serde(with = "json::tlv")]
        0 req pending_notification: ProfileInstallationResult,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct Es9CancelSessionRequest: 0x67 {
        0 req transaction_id: TransactionId,
        #[serde(with = "json::tlv")]
        1 req cancel_session_response: CancelSessionResponseOk,
    }
}

/// Encodes a message body in the given wire format.
pub fn encode_body<M: TlvCodec + Serialize>(format: WireFormat, message: &M) -> Vec<u8> {
    match format {
        WireFormat::Compact => message.to_tlv(),
        WireFormat::Json => serde_json::to_vec(message).expect("message serializes"),
    }
}

/// Decodes a body; JSON must be in the exact compact form `encode_body`
/// produces, so each message has a single accepted rendering.
pub fn decode_body<M: TlvCodec + DeserializeOwned + Serialize>(
    format: WireFormat,
    body: &[u8],
) -> Result<M, CodecError> {
    match format {
        WireFormat::Compact => M::from_tlv(body),
        WireFormat::Json => {
            let message: M = serde_json::from_slice(body).map_err(|e| CodecError::Json(e.to_string()))?;
            if encode_body(WireFormat::Json, &message) != body {
                return Err(CodecError::Json("non-canonical JSON rendering".into()));
            }
            Ok(message)
        }
    }
}

/// Any ES9+ request, tagged by function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Es9Request {
    InitiateAuthentication(InitiateAuthenticationRequest),
    AuthenticateClient(AuthenticateClientRequest),
    GetBoundProfilePackage(GetBoundProfilePackageRequest),
    HandleNotification(HandleNotificationRequest),
    CancelSession(Es9CancelSessionRequest),
}

impl Es9Request {
    pub fn function(&self) -> Es9Function {
        match self {
            Es9Request::InitiateAuthentication(_) => Es9Function::InitiateAuthentication,
            Es9Request::AuthenticateClient(_) => Es9Function::AuthenticateClient,
            Es9Request::GetBoundProfilePackage(_) => Es9Function::GetBoundProfilePackage,
            Es9Request::HandleNotification(_) => Es9Function::HandleNotification,
            Es9Request::CancelSession(_) => Es9Function::CancelSession,
        }
    }

    /// Session the request belongs to; `None` before one exists.
    pub fn transaction_id(&self) -> Option<TransactionId> {
        match self {
            Es9Request::InitiateAuthentication(_) => None,
            Es9Request::AuthenticateClient(r) => Some(r.transaction_id),
            Es9Request::GetBoundProfilePackage(r) => Some(r.transaction_id),
            Es9Request::HandleNotification(r) => Some(r.pending_notification.transaction_id()),
            Es9Request::CancelSession(r) => Some(r.transaction_id),
        }
    }

    pub fn encode(&self, format: WireFormat) -> Vec<u8> {
        match self {
            Es9Request::InitiateAuthentication(m) => encode_body(format, m),
            Es9Request::AuthenticateClient(m) => encode_body(format, m),
            Es9Request::GetBoundProfilePackage(m) => encode_body(format, m),
            Es9Request::HandleNotification(m) => encode_body(format, m),
            Es9Request::CancelSession(m) => encode_body(format, m),
        }
    }

    pub fn decode(function: Es9Function, format: WireFormat, body: &[u8]) -> Result<Self, CodecError> {
        Ok(match function {
            Es9Function::InitiateAuthentication => Es9Request::InitiateAuthentication(decode_body(format, body)?),
            Es9Function::AuthenticateClient => Es9Request::AuthenticateClient(decode_body(format, body)?),
            Es9Function::GetBoundProfilePackage => Es9Request::GetBoundProfilePackage(decode_body(format, body)?),
            Es9Function::HandleNotification => Es9Request::HandleNotification(decode_body(format, body)?),
            Es9Function::CancelSession => Es9Request::CancelSession(decode_body(format, body)?),
        })
    }
}

/// Successful ES9+ response bodies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Es9Ok {
    InitiateAuthentication(InitiateAuthenticationOk),
    AuthenticateClient(AuthenticateClientOk),
    GetBoundProfilePackage(GetBoundProfilePackageOk),
    /// HandleNotification and CancelSession return only the header.
    Ack,
}

impl Es9Ok {
    pub fn encode(&self, format: WireFormat) -> Vec<u8> {
        match self {
            Es9Ok::InitiateAuthentication(m) => encode_body(format, m),
            Es9Ok::AuthenticateClient(m) => encode_body(format, m),
            Es9Ok::GetBoundProfilePackage(m) => encode_body(format, m),
            Es9Ok::Ack => encode_body(format, &Empty {}),
        }
    }

    pub fn decode(function: Es9Function, format: WireFormat, body: &[u8]) -> Result<Self, CodecError> {
        Ok(match function {
            Es9Function::InitiateAuthentication => Es9Ok::InitiateAuthentication(decode_body(format, body)?),
            Es9Function::AuthenticateClient => Es9Ok::AuthenticateClient(decode_body(format, body)?),
            Es9Function::GetBoundProfilePackage => Es9Ok::GetBoundProfilePackage(decode_body(format, body)?),
            Es9Function::HandleNotification | Es9Function::CancelSession => {
                decode_body::<Empty>(format, body)?;
                Es9Ok::Ack
            }
        })
    }
}

/// Outcome of one ES9+ call as seen by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Es9Reply {
    Ok(Es9Ok),
    Failed { reason_code: u8, message: String },
}

impl Es9Reply {
    pub fn failed(function: Es9Function, code: u8) -> Self {
        Es9Reply::Failed {
            reason_code: code,
            message: function.reason_name(code).unwrap_or("undefinedError").to_string(),
        }
    }

    pub fn status(&self) -> FunctionStatus {
        match self {
            Es9Reply::Ok(_) => FunctionStatus::Success,
            Es9Reply::Failed { reason_code, message } => FunctionStatus::failed(*reason_code, message.clone()),
        }
    }

    /// Body bytes; empty for failures.
    pub fn body(&self, format: WireFormat) -> Vec<u8> {
        match self {
            Es9Reply::Ok(ok) => ok.encode(format),
            Es9Reply::Failed { .. } => Vec::new(),
        }
    }

    pub fn from_parts(
        function: Es9Function,
        format: WireFormat,
        status: &FunctionStatus,
        body: &[u8],
    ) -> Result<Self, CodecError> {
        match status {
            FunctionStatus::Success => Ok(Es9Reply::Ok(Es9Ok::decode(function, format, body)?)),
            FunctionStatus::Failed { reason_code, message } => {
                if !body.is_empty() {
                    return Err(CodecError::InvalidValue("failed response with a body"));
                }
                Ok(Es9Reply::Failed {
                    reason_code: *reason_code,
                    message: message.clone(),
                })
            }
        }
    }
}
