//! In-process transport between actors: routing, fault injection and
//! transcript recording.

mod fault;
pub mod scenario;
mod transcript;

pub use fault::{BadGlob, Direction, FaultAction, FaultEngine, FaultRule, PkiAuthority};
pub use transcript::{
    compare_lines, read_transcript, render, to_jsonl, verify_transcript, write_transcript, TranscriptEntry,
    TranscriptError, Verdict,
};

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

use crate::clock::Clock;
use crate::messages::{BadEnvelope, Envelope, FunctionStatus, Head, WireFormat};

/// A message-handling endpoint owned by the transport.
pub trait Actor: Send {
    fn address(&self) -> &str;

    /// Handles one decoded request addressed to this actor. `net` lets the
    /// actor call other actors while it works.
    fn handle(&mut self, net: &Transport, request: &Envelope) -> Envelope;
}

pub type ActorHandle = Arc<Mutex<dyn Actor>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("no route to {0}")]
    Unroutable(String),
    #[error("message dropped by fault rule {0}")]
    Dropped(String),
    #[error("undecodable response: {0}")]
    BadResponse(BadEnvelope),
}

/// Status for a request body that does not decode.
pub fn invalid_input() -> FunctionStatus {
    FunctionStatus::failed(124, "invalidInputData")
}

/// Status for requests the actor cannot serve at all.
pub fn undefined_error() -> FunctionStatus {
    FunctionStatus::failed(127, "undefinedError")
}

pub struct Transport {
    clock: Clock,
    routes: RwLock<BTreeMap<String, ActorHandle>>,
    faults: Mutex<FaultEngine>,
    authority: RwLock<Option<PkiAuthority>>,
    transcript: Mutex<Vec<TranscriptEntry>>,
}

impl Transport {
    pub fn new(clock: Clock) -> Self {
        Transport {
            clock,
            routes: RwLock::new(BTreeMap::new()),
            faults: Mutex::new(FaultEngine::new(&[]).expect("no rules")),
            authority: RwLock::new(None),
            transcript: Mutex::new(Vec::new()),
        }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn route(&self, actor: ActorHandle) {
        let address = actor.lock().expect("actor lock").address().to_string();
        self.routes.write().expect("routes lock").insert(address, actor);
    }

    pub fn set_faults(&self, rules: &[FaultRule]) -> Result<(), BadGlob> {
        *self.faults.lock().expect("faults lock") = FaultEngine::new(rules)?;
        Ok(())
    }

    pub fn set_authority(&self, authority: PkiAuthority) {
        *self.authority.write().expect("authority lock") = Some(authority);
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.transcript.lock().expect("transcript lock").clone()
    }

    /// Records that `from` opened a fresh connection to `to`.
    pub fn open_connection(&self, from: &str, to: &str) {
        self.record(TranscriptEntry {
            seq: 0,
            direction: "connection-open".into(),
            from: from.into(),
            to: to.into(),
            endpoint: String::new(),
            envelope: Vec::new(),
            decoded: None,
            original: None,
            fault: None,
            dropped: false,
        });
    }

    fn record(&self, mut entry: TranscriptEntry) {
        let mut t = self.transcript.lock().expect("transcript lock");
        entry.seq = t.len() as u64 + 1;
        t.push(entry);
    }

    /// Runs faults over one message and records it. Returns the delivered
    /// bytes, or the id of the rule that dropped it.
    fn pass(&self, direction: Direction, from: &str, to: &str, endpoint: &str, bytes: Vec<u8>) -> Result<Vec<u8>, String> {
        let mut delivered = bytes.clone();
        let applied = {
            let authority = self.authority.read().expect("authority lock");
            self.faults.lock().expect("faults lock").apply(
                direction,
                endpoint,
                &mut delivered,
                &self.clock,
                authority.as_ref(),
            )
        };
        let fault = (!applied.rule_ids.is_empty()).then(|| applied.rule_ids.join(","));
        self.record(TranscriptEntry {
            seq: 0,
            direction: direction.name().into(),
            from: from.into(),
            to: to.into(),
            endpoint: endpoint.into(),
            decoded: render(&delivered),
            original: (delivered != bytes).then_some(bytes),
            envelope: delivered.clone(),
            fault: fault.clone(),
            dropped: applied.dropped,
        });
        if applied.dropped {
            Err(fault.unwrap_or_default())
        } else {
            Ok(delivered)
        }
    }

    /// Delivers a request and returns the decoded response.
    pub fn send(&self, from: &str, to: &str, request: &Envelope) -> Result<Envelope, TransportError> {
        let endpoint = request.endpoint().unwrap_or_default().to_string();
        let actor = self
            .routes
            .read()
            .expect("routes lock")
            .get(to)
            .cloned()
            .ok_or_else(|| TransportError::Unroutable(to.to_string()))?;

        let bytes = self
            .pass(Direction::Request, from, to, &endpoint, request.encode())
            .map_err(TransportError::Dropped)?;

        let response = match Envelope::decode(&bytes) {
            Ok(env) => match &env.head {
                Head::Request { host, .. } if host == to => actor.lock().expect("actor lock").handle(self, &env),
                _ => Envelope::response(env.format, undefined_error(), Vec::new()),
            },
            Err(_) => {
                let format = if bytes.first() == Some(&0x7C) {
                    WireFormat::Compact
                } else {
                    WireFormat::Json
                };
                Envelope::response(format, invalid_input(), Vec::new())
            }
        };

        let bytes = self
            .pass(Direction::Response, to, from, &endpoint, response.encode())
            .map_err(TransportError::Dropped)?;
        let decoded = Envelope::decode(&bytes).map_err(TransportError::BadResponse)?;
        if decoded.status().is_none() {
            return Err(TransportError::BadResponse(BadEnvelope::BadStartLine));
        }
        Ok(decoded)
    }
}
