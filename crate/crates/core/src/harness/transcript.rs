//! Transcript entries, JSONL persistence and golden comparison.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::messages::json::{b64, unb64};
use crate::messages::{Envelope, Head, WireFormat};
use crate::tlv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TranscriptEntry {
    pub seq: u64,
    /// `request`, `response` or `connection-open`.
    pub direction: String,
    pub from: String,
    pub to: String,
    pub endpoint: String,
    /// Bytes as delivered, after any fault.
    #[serde(with = "b64_bytes")]
    pub envelope: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoded: Option<serde_json::Value>,
    /// Bytes before a fault changed them.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "b64_opt")]
    pub original: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dropped: bool,
}

mod b64_bytes {
    use super::*;

    pub fn serialize<S: serde::Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&b64(v))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        unb64(&text).ok_or_else(|| serde::de::Error::custom("invalid base64"))
    }
}

mod b64_opt {
    use super::*;

    pub fn serialize<S: serde::Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_str(&b64(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        b64_bytes::deserialize(d).map(Some)
    }
}

/// Human-readable view of an envelope: the head plus the body as JSON, or
/// as a TLV tree for compact bodies.
pub fn render(bytes: &[u8]) -> Option<serde_json::Value> {
    let envelope = Envelope::decode(bytes).ok()?;
    let format = serde_json::to_value(envelope.format).expect("serializes");
    let body = if envelope.body.is_empty() {
        serde_json::Value::Null
    } else {
        match envelope.format {
            WireFormat::Json => serde_json::from_slice(&envelope.body).unwrap_or(serde_json::Value::Null),
            WireFormat::Compact => tlv::dump(&envelope.body),
        }
    };
    Some(match &envelope.head {
        Head::Request { endpoint, host } => serde_json::json!({
            "format": format, "endpoint": endpoint, "host": host, "body": body,
        }),
        Head::Response { status } => serde_json::json!({
            "format": format, "status": status.to_json(), "body": body,
        }),
    })
}

pub fn to_jsonl(entries: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path} line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) -> Result<(), TranscriptError> {
    fs::write(path, to_jsonl(entries)).map_err(|source| TranscriptError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, TranscriptError> {
    let text = fs::read_to_string(path).map_err(|source| TranscriptError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| TranscriptError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Equal,
    FirstDivergence { seq: u64 },
}

/// Compares two transcripts line by line. A divergence is reported at the
/// seq of the first differing line, or one past the shorter transcript.
pub fn compare_lines(actual: &str, golden: &str) -> Verdict {
    let a: Vec<&str> = actual.lines().collect();
    let g: Vec<&str> = golden.lines().collect();
    for (i, (x, y)) in a.iter().zip(&g).enumerate() {
        if x != y {
            let seq = serde_json::from_str::<TranscriptEntry>(x)
                .map(|e| e.seq)
                .unwrap_or(i as u64 + 1);
            return Verdict::FirstDivergence { seq };
        }
    }
    if a.len() == g.len() {
        Verdict::Equal
    } else {
        Verdict::FirstDivergence {
            seq: a.len().min(g.len()) as u64 + 1,
        }
    }
}

pub fn verify_transcript(path: &Path, golden: &Path) -> Result<Verdict, TranscriptError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| TranscriptError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let actual = read(path)?;
    let expected = read(golden)?;
    Ok(compare_lines(&actual, &expected))
}
