//! Running worlds and reading what crossed the wire.

use serde_json::Value;

use rsplab_core::harness::scenario::{FlowName, ScenarioSpec, World};
use rsplab_core::harness::{FaultAction, FaultRule, TranscriptEntry};
use rsplab_core::RunSummary;
use rsplab_core::messages::es10_endpoint as es10;
use rsplab_core::messages::json::b64;
use rsplab_core::messages::*;
use rsplab_core::tlv::TlvCodec;

pub const INITIATE_AUTH: &str = "/gsma/rsp2/es9plus/initiateAuthentication";
pub const AUTH_CLIENT: &str = "/gsma/rsp2/es9plus/authenticateClient";
pub const GET_BPP: &str = "/gsma/rsp2/es9plus/getBoundProfilePackage";
pub const HANDLE_NOTIFICATION: &str = "/gsma/rsp2/es9plus/handleNotification";

pub fn spec(name: &str, flow: FlowName, seed: u64) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(name, flow);
    spec.seed = seed;
    spec
}

pub fn run(spec: &ScenarioSpec) -> (World, RunSummary) {
    let mut world = World::build(spec).expect("scenario builds");
    let summary = world.run();
    (world, summary)
}

/// A transcript entry with its envelope decoded.
#[derive(Debug, Clone)]
pub struct Message {
    pub seq: u64,
    pub endpoint: String,
    pub request: bool,
    pub envelope: Envelope,
}

/// Every delivered request and response that decodes as an envelope.
pub fn messages(entries: &[TranscriptEntry]) -> Vec<Message> {
    entries
        .iter()
        .filter(|e| !e.dropped && e.direction != "connection-open")
        .filter_map(|e| {
            Some(Message {
                seq: e.seq,
                endpoint: e.endpoint.clone(),
                request: e.direction == "request",
                envelope: Envelope::decode(&e.envelope).ok()?,
            })
        })
        .collect()
}

/// Numeric error codes returned on the wire, keyed by endpoint. Failed
/// function statuses report their reason code; ES10 results that carry an
/// error inside a successful response report that.
pub fn error_codes(entries: &[TranscriptEntry]) -> Vec<(String, u8)> {
    let mut out = Vec::new();
    for m in messages(entries).into_iter().filter(|m| !m.request) {
        let status = m.envelope.status().expect("responses carry a status");
        if let Some(code) = status.reason_code() {
            out.push((m.endpoint, code));
            continue;
        }
        if m.envelope.format != WireFormat::Compact {
            continue;
        }
        let body = &m.envelope.body;
        let code = match m.endpoint.as_str() {
            es10::AUTHENTICATE_SERVER => match AuthenticateServerResponse::from_tlv(body) {
                Ok(AuthenticateServerResponse::Error(e)) => Some(e.authenticate_error_code.code()),
                _ => None,
            },
            es10::PREPARE_DOWNLOAD => match PrepareDownloadResponse::from_tlv(body) {
                Ok(PrepareDownloadResponse::Error(e)) => Some(e.download_error_code.code()),
                _ => None,
            },
            es10::LOAD_BPP => match LoadBppResponse::from_tlv(body) {
                Ok(LoadBppResponse::Result(pir)) => match pir.profile_installation_result_data.final_result {
                    FinalResult::Error(e) => Some(e.error_reason.code()),
                    FinalResult::Success(_) => None,
                },
                _ => None,
            },
            _ => None,
        };
        if let Some(code) = code {
            out.push((m.endpoint, code));
        }
    }
    out
}

/// The `n`th (1-based) message on `endpoint` in the given direction.
pub fn nth(entries: &[TranscriptEntry], endpoint: &str, request: bool, n: usize) -> Option<Message> {
    messages(entries)
        .into_iter()
        .filter(|m| m.endpoint == endpoint && m.request == request)
        .nth(n - 1)
}

/// A top-level field of the first JSON body on `endpoint`.
pub fn json_field(entries: &[TranscriptEntry], endpoint: &str, request: bool, field: &str) -> Value {
    let m = nth(entries, endpoint, request, 1).unwrap_or_else(|| panic!("no message on {endpoint}"));
    let body: Value = serde_json::from_slice(&m.envelope.body).expect("JSON body");
    body.get(field).cloned().unwrap_or_else(|| panic!("{endpoint} has no field {field}"))
}

/// The raw encoded envelope of the `n`th message on `endpoint`.
pub fn raw(entries: &[TranscriptEntry], endpoint: &str, request: bool, n: usize) -> Vec<u8> {
    let direction = if request { "request" } else { "response" };
    entries
        .iter()
        .filter(|e| e.endpoint == endpoint && e.direction == direction)
        .nth(n - 1)
        .unwrap_or_else(|| panic!("no {direction} {n} on {endpoint}"))
        .envelope
        .clone()
}

/// A message encoded the way JSON bodies carry nested structures.
pub fn tlv_value<T: TlvCodec>(message: &T) -> Value {
    Value::String(b64(&message.to_tlv()))
}

pub fn swap(endpoint: &str, field: &str, value: Value) -> FaultRule {
    FaultRule::new(
        endpoint,
        FaultAction::SwapField {
            field: field.into(),
            value,
        },
    )
}
