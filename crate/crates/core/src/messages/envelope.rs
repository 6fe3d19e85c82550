//! The HTTP-shaped envelope carried by the transport.
//!
//! Two renderings exist. The JSON form mirrors an ES9+ HTTP exchange: a
//! start line, a fixed header set and a JSON body. The compact form is a
//! single TLV used on ES10b and optionally on ESipa.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tlv::{self, CodecError, Fields, TlvWriter};

use super::FunctionStatus;

pub const ADMIN_PROTOCOL: &str = "gsma/rsp/v2.5.0";
pub const CONTENT_TYPE: &str = "application/json;charset=UTF-8";

const REQUEST_TAG: u8 = 0x7C;
const RESPONSE_TAG: u8 = 0x7D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WireFormat {
    #[serde(rename = "jsonEnvelope")]
    Json,
    #[serde(rename = "compactTlv")]
    Compact,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    Request { endpoint: String, host: String },
    Response { status: FunctionStatus },
}

/// One message on the wire. `body` holds the JSON object text or the TLV of
/// the payload, and is empty for failed responses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub format: WireFormat,
    pub head: Head,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BadEnvelope {
    #[error("missing X-Admin-Protocol header")]
    MissingProtocolHeader,
    #[error("bad start line")]
    BadStartLine,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("Content-Length does not match the body")]
    BadLength,
    #[error("invalid JSON: {0}")]
    InvalidJson(String),
    #[error("invalid compact envelope: {0}")]
    Codec(#[from] CodecError),
}

impl Envelope {
    pub fn request(format: WireFormat, endpoint: impl Into<String>, host: impl Into<String>, body: Vec<u8>) -> Self {
        Envelope {
            format,
            head: Head::Request {
                endpoint: endpoint.into(),
                host: host.into(),
            },
            body,
        }
    }

    pub fn response(format: WireFormat, status: FunctionStatus, body: Vec<u8>) -> Self {
        let body = if status.is_success() { body } else { Vec::new() };
        Envelope {
            format,
            head: Head::Response { status },
            body,
        }
    }

    pub fn endpoint(&self) -> Option<&str> {
        match &self.head {
            Head::Request { endpoint, .. } => Some(endpoint),
            Head::Response { .. } => None,
        }
    }

    pub fn status(&self) -> Option<&FunctionStatus> {
        match &self.head {
            Head::Request { .. } => None,
            Head::Response { status } => Some(status),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        match self.format {
            WireFormat::Json => self.encode_json(),
            WireFormat::Compact => self.encode_compact(),
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, BadEnvelope> {
        if bytes.len() > tlv::MAX_INPUT {
            return Err(BadEnvelope::Codec(CodecError::LengthOverflow));
        }
        match bytes.first() {
            Some(&REQUEST_TAG) | Some(&RESPONSE_TAG) => Self::decode_compact(bytes),
            _ => Self::decode_json(bytes),
        }
    }

    fn encode_json(&self) -> Vec<u8> {
        let (start, host, body) = match &self.head {
            Head::Request { endpoint, host } => (
                format!("POST {endpoint} HTTP/1.1"),
                Some(host),
                self.body.clone(),
            ),
            Head::Response { status } => {
                let mut obj = serde_json::Map::new();
                obj.insert(
                    "header".into(),
                    serde_json::json!({ "functionExecutionStatus": status.to_json() }),
                );
                if status.is_success() {
                    let rest: serde_json::Map<String, serde_json::Value> =
                        serde_json::from_slice(&self.body).expect("response body is a JSON object");
                    obj.extend(rest);
                }
                ("HTTP/1.1 200 OK".to_string(), None, serde_json::to_vec(&obj).expect("serializes"))
            }
        };
        let mut text = start;
        text.push_str("\r\n");
        if let Some(host) = host {
            text.push_str(&format!("Host: {host}\r\n"));
        }
        text.push_str(&format!("X-Admin-Protocol: {ADMIN_PROTOCOL}\r\n"));
        text.push_str(&format!("Content-Type: {CONTENT_TYPE}\r\n"));
        text.push_str(&format!("Content-Length: {}\r\n\r\n", body.len()));
        let mut out = text.into_bytes();
        out.extend_from_slice(&body);
        out
    }

    fn decode_json(bytes: &[u8]) -> Result<Self, BadEnvelope> {
        let split = bytes
            .windows(4)
            .position(|w| w == b"\r\n\r\n")
            .ok_or(BadEnvelope::BadStartLine)?;
        let head = std::str::from_utf8(&bytes[..split]).map_err(|_| BadEnvelope::BadStartLine)?;
        let body = &bytes[split + 4..];
        let mut lines = head.split("\r\n");
        let start = lines.next().ok_or(BadEnvelope::BadStartLine)?;

        let is_request = if start == "HTTP/1.1 200 OK" {
            false
        } else if start.starts_with("POST ") && start.ends_with(" HTTP/1.1") {
            true
        } else {
            return Err(BadEnvelope::BadStartLine);
        };

        let mut host = None;
        let mut protocol = None;
        let mut content_type = None;
        let mut length = None;
        for line in lines {
            let (name, value) = line
                .split_once(": ")
                .ok_or_else(|| BadEnvelope::BadHeader(line.to_string()))?;
            let slot = match name.to_ascii_lowercase().as_str() {
                "host" if is_request => &mut host,
                "x-admin-protocol" => &mut protocol,
                "content-type" => &mut content_type,
                "content-length" => &mut length,
                _ => return Err(BadEnvelope::BadHeader(name.to_string())),
            };
            if slot.replace(value).is_some() {
                return Err(BadEnvelope::BadHeader(format!("duplicate {name}")));
            }
        }
        match protocol {
            None => return Err(BadEnvelope::MissingProtocolHeader),
            Some(p) if p != ADMIN_PROTOCOL => return Err(BadEnvelope::BadHeader(format!("protocol {p}"))),
            _ => {}
        }
        if content_type != Some(CONTENT_TYPE) {
            return Err(BadEnvelope::BadHeader("Content-Type".into()));
        }
        let length = length.ok_or(BadEnvelope::BadLength)?;
        if length.parse::<usize>().ok().map(|n| n.to_string()).as_deref() != Some(length)
            || length.parse::<usize>() != Ok(body.len())
        {
            return Err(BadEnvelope::BadLength);
        }

        let value: serde_json::Value =
            serde_json::from_slice(body).map_err(|e| BadEnvelope::InvalidJson(e.to_string()))?;
        let serde_json::Value::Object(mut obj) = value else {
            return Err(BadEnvelope::InvalidJson("body is not an object".into()));
        };
        if serde_json::to_vec(&obj).expect("serializes") != body {
            return Err(BadEnvelope::InvalidJson("non-canonical rendering".into()));
        }

        if is_request {
            let endpoint = &start["POST ".len()..start.len() - " HTTP/1.1".len()];
            if endpoint.is_empty() || endpoint.contains(' ') {
                return Err(BadEnvelope::BadStartLine);
            }
            let host = host.ok_or_else(|| BadEnvelope::BadHeader("missing Host".into()))?;
            return Ok(Envelope::request(WireFormat::Json, endpoint, host, body.to_vec()));
        }

        if obj.keys().next().map(String::as_str) != Some("header") {
            return Err(BadEnvelope::InvalidJson("header must come first".into()));
        }
        let header = obj.shift_remove("header").expect("checked");
        let status = header
            .as_object()
            .filter(|h| h.len() == 1)
            .and_then(|h| h.get("functionExecutionStatus"))
            .and_then(FunctionStatus::from_json)
            .ok_or_else(|| BadEnvelope::InvalidJson("bad functionExecutionStatus".into()))?;
        let body = if status.is_success() {
            serde_json::to_vec(&obj).expect("serializes")
        } else if obj.is_empty() {
            Vec::new()
        } else {
            return Err(BadEnvelope::InvalidJson("failed response carries a body".into()));
        };
        Ok(Envelope::response(WireFormat::Json, status, body))
    }

    fn encode_compact(&self) -> Vec<u8> {
        let mut w = TlvWriter::default();
        match &self.head {
            Head::Request { endpoint, host } => {
                w.field(0, endpoint);
                w.field(1, host);
                w.field(2, &ADMIN_PROTOCOL.to_string());
                w.field(3, &self.body);
                w.into_tlv(REQUEST_TAG)
            }
            Head::Response { status } => {
                w.field(0, status);
                w.field(1, &ADMIN_PROTOCOL.to_string());
                if status.is_success() {
                    w.field(2, &self.body);
                }
                w.into_tlv(RESPONSE_TAG)
            }
        }
    }

    fn decode_compact(bytes: &[u8]) -> Result<Self, BadEnvelope> {
        let (tag, content) = tlv::split_tlv(bytes)?;
        let mut f = Fields::new(content);
        let envelope = if tag == REQUEST_TAG {
            let endpoint: String = f.req(0)?;
            let host: String = f.req(1)?;
            check_protocol(f.req(2)?)?;
            let body: Vec<u8> = f.req(3)?;
            Envelope::request(WireFormat::Compact, endpoint, host, body)
        } else {
            let status: FunctionStatus = f.req(0)?;
            check_protocol(f.req(1)?)?;
            let body: Option<Vec<u8>> = f.opt(2)?;
            if body.is_some() != status.is_success() {
                return Err(BadEnvelope::Codec(CodecError::InvalidValue("response body presence")));
            }
            Envelope::response(WireFormat::Compact, status, body.unwrap_or_default())
        };
        f.finish()?;
        Ok(envelope)
    }
}

fn check_protocol(protocol: String) -> Result<(), BadEnvelope> {
    if protocol == ADMIN_PROTOCOL {
        Ok(())
    } else {
        Err(BadEnvelope::BadHeader(format!("protocol {protocol}")))
    }
}
