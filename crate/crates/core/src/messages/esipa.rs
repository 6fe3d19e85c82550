//! ESipa: the interface between the eIM and the IPA on a device.
//!
//! In assisted downloads the IPA answers each eIM call with its next ES9+
//! request (or a final report); the eIM performs that request against the
//! SM-DP+ and relays the reply back on the endpoint named after the function.

use serde::{Deserialize, Serialize};

use crate::tlv::{self, CodecError, Fields, TlvWriter};

use super::json;
use super::{
    EimConfigRequest, Es9Function, Es9Reply, Es9Request, FlowReport,
    FunctionStatus, WireFormat,
};

pub const ESIPA_PREFIX: &str = "/gsma/rsp2/esipa/";

pub fn esipa_endpoint(name: &str) -> String {
    format!("{ESIPA_PREFIX}{name}")
}

pub const INITIATE_DOWNLOAD: &str = "initiateDownload";
pub const PUSH_ACTIVATION_CODE: &str = "pushActivationCode";
pub const EIM_CONFIGURATION: &str = "eimConfiguration";

tlv_struct! {
    /// Starts an assisted download. The matching id comes from the
    /// activation code the eIM parsed.
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct IpaInitiateDownload: 0x70 {
        0 req smdp_address: String,
        1 req matching_id: String,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct PushActivationCode: 0x71 {
        0 req activation_code: String,
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct EsipaEimConfig: 0x76 {
        #[serde(with = "json::tlv")]
        0 req request: EimConfigRequest,
    }
}

/// The IPA's answer to an eIM call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IpaStep {
    Next(Es9Request),
    Finished(FlowReport),
}

const STEP_TAG: u8 = 0x72;
const RELAYED_TAG: u8 = 0x75;

fn function_of_tag(tag: u8) -> Option<Es9Function> {
    Some(match tag {
        0x60 => Es9Function::InitiateAuthentication,
        0x62 => Es9Function::AuthenticateClient,
        0x64 => Es9Function::GetBoundProfilePackage,
        0x66 => Es9Function::HandleNotification,
        0x67 => Es9Function::CancelSession,
        _ => return None,
    })
}

impl IpaStep {
    pub fn encode(&self, format: WireFormat) -> Vec<u8> {
        match format {
            WireFormat::Compact => {
                let mut w = TlvWriter::default();
                match self {
                    IpaStep::Next(req) => w.field(0, &RawTlv(req.encode(WireFormat::Compact))),
                    IpaStep::Finished(report) => w.field(1, report),
                }
                w.into_tlv(STEP_TAG)
            }
            WireFormat::Json => {
                let value = match self {
                    IpaStep::Next(req) => {
                        let body: serde_json::Value =
                            serde_json::from_slice(&req.encode(WireFormat::Json)).expect("valid JSON");
                        serde_json::json!({ "next": { "function": req.function().name(), "request": body } })
                    }
                    IpaStep::Finished(report) => serde_json::json!({ "finished": report }),
                };
                serde_json::to_vec(&value).expect("serializes")
            }
        }
    }

    pub fn decode(format: WireFormat, body: &[u8]) -> Result<Self, CodecError> {
        let step = match format {
            WireFormat::Compact => {
                let (tag, content) = tlv::split_tlv(body)?;
                if tag != STEP_TAG {
                    return Err(CodecError::UnexpectedTag { expected: STEP_TAG, found: tag });
                }
                let mut f = Fields::new(content);
                let (idx, inner) = f.choice()?;
                match idx {
                    0 => {
                        let RawTlv(raw) = <RawTlv as tlv::FieldValue>::get(inner)?;
                        let function = function_of_tag(raw[0]).ok_or(CodecError::UnknownTag(raw[0]))?;
                        IpaStep::Next(Es9Request::decode(function, WireFormat::Compact, &raw)?)
                    }
                    1 => IpaStep::Finished(<FlowReport as tlv::FieldValue>::get(inner)?),
                    other => return Err(CodecError::UnknownTag(tlv::FIELD_TAG | other)),
                }
            }
            WireFormat::Json => {
                let value: serde_json::Value =
                    serde_json::from_slice(body).map_err(|e| CodecError::Json(e.to_string()))?;
                let obj = value.as_object().filter(|o| o.len() == 1).ok_or(bad_json("step"))?;
                if let Some(next) = obj.get("next") {
                    let next = next.as_object().filter(|o| o.len() == 2).ok_or(bad_json("next"))?;
                    let function = next
                        .get("function")
                        .and_then(|f| f.as_str())
                        .and_then(Es9Function::from_name)
                        .ok_or(bad_json("function"))?;
                    let request = next.get("request").ok_or(bad_json("request"))?;
                    let raw = serde_json::to_vec(request).expect("serializes");
                    IpaStep::Next(Es9Request::decode(function, WireFormat::Json, &raw)?)
                } else if let Some(report) = obj.get("finished") {
                    IpaStep::Finished(
                        serde_json::from_value(report.clone()).map_err(|e| CodecError::Json(e.to_string()))?,
                    )
                } else {
                    return Err(bad_json("step"));
                }
            }
        };
        if step.encode(format) != body {
            return Err(CodecError::Json("non-canonical step".into()));
        }
        Ok(step)
    }
}

fn bad_json(what: &str) -> CodecError {
    CodecError::Json(format!("malformed {what}"))
}

/// A nested complete TLV carried as a field value.
struct RawTlv(Vec<u8>);

impl tlv::FieldValue for RawTlv {
    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0);
    }

    fn get(bytes: &[u8]) -> tlv::Result<Self> {
        tlv::split_tlv(bytes)?;
        Ok(RawTlv(bytes.to_vec()))
    }
}

/// Encodes an ES9+ reply relayed to the IPA. The JSON form is exactly the
/// ES9+ response body including its header.
pub fn encode_relayed_reply(reply: &Es9Reply, format: WireFormat) -> Vec<u8> {
    let status = reply.status();
    match format {
        WireFormat::Compact => {
            let mut w = TlvWriter::default();
            w.field(0, &status);
            if let Es9Reply::Ok(ok) = reply {
                w.field(1, &ok.encode(WireFormat::Compact));
            }
            w.into_tlv(RELAYED_TAG)
        }
        WireFormat::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("header".into(), serde_json::json!({ "functionExecutionStatus": status.to_json() }));
            if let Es9Reply::Ok(ok) = reply {
                let rest: serde_json::Map<String, serde_json::Value> =
                    serde_json::from_slice(&ok.encode(WireFormat::Json)).expect("object");
                obj.extend(rest);
            }
            serde_json::to_vec(&obj).expect("serializes")
        }
    }
}

pub fn decode_relayed_reply(function: Es9Function, format: WireFormat, body: &[u8]) -> Result<Es9Reply, CodecError> {
    let reply = match format {
        WireFormat::Compact => {
            let (tag, content) = tlv::split_tlv(body)?;
            if tag != RELAYED_TAG {
                return Err(CodecError::UnexpectedTag { expected: RELAYED_TAG, found: tag });
            }
            let mut f = Fields::new(content);
            let status: FunctionStatus = f.req(0)?;
            let inner: Option<Vec<u8>> = f.opt(1)?;
            f.finish()?;
            if inner.is_some() != status.is_success() {
                return Err(CodecError::InvalidValue("relayed body presence"));
            }
            Es9Reply::from_parts(function, WireFormat::Compact, &status, &inner.unwrap_or_default())?
        }
        WireFormat::Json => {
            let mut obj: serde_json::Map<String, serde_json::Value> =
                serde_json::from_slice(body).map_err(|e| CodecError::Json(e.to_string()))?;
            if obj.keys().next().map(String::as_str) != Some("header") {
                return Err(bad_json("header"));
            }
            let header = obj.shift_remove("header").expect("checked");
            let status = header
                .as_object()
                .filter(|h| h.len() == 1)
                .and_then(|h| h.get("functionExecutionStatus"))
                .and_then(FunctionStatus::from_json)
                .ok_or(bad_json("functionExecutionStatus"))?;
            let rest = if status.is_success() {
                serde_json::to_vec(&obj).expect("serializes")
            } else if obj.is_empty() {
                Vec::new()
            } else {
                return Err(bad_json("failed reply body"));
            };
            Es9Reply::from_parts(function, WireFormat::Json, &status, &rest)?
        }
    };
    if encode_relayed_reply(&reply, format) != body {
        return Err(CodecError::Json("non-canonical relayed reply".into()));
    }
    Ok(reply)
}
