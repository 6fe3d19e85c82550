//! Deterministic fault rules applied by the transport.

use std::collections::BTreeMap;

use globset::{Glob, GlobMatcher};
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::messages::{Envelope, WireFormat};
use crate::pki::{issue_crl, Certificate, CrlDirectory, KeyPair, PkiFixture, PublicKeyId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Direction {
    #[default]
    Request,
    Response,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Request => "request",
            Direction::Response => "response",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FaultAction {
    Drop,
    /// XOR one byte of the encoded envelope; the offset wraps around.
    TamperByte {
        offset: usize,
        #[serde(default = "default_xor")]
        xor: u8,
    },
    /// Replace a top-level field of a JSON body. Compact bodies are left
    /// untouched.
    SwapField { field: String, value: serde_json::Value },
    /// Advance the logical clock before delivery.
    DelayLogical(u64),
    /// Move the clock one second past the certificate's notAfter.
    ExpireCert(u64),
    /// Publish a fresh CRL from the certificate's issuer listing it.
    Revoke(u64),
}

fn default_xor() -> u8 {
    0x01
}

fn default_glob() -> String {
    "*".into()
}

fn one() -> u32 {
    1
}

/// Fires on matches `occurrence .. occurrence + count` (1-based) of
/// messages in `direction` whose endpoint matches the glob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FaultRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default = "default_glob")]
    pub endpoint: String,
    #[serde(default = "one")]
    pub occurrence: u32,
    #[serde(default = "one")]
    pub count: u32,
    #[serde(default)]
    pub direction: Direction,
    pub action: FaultAction,
}

impl FaultRule {
    pub fn new(endpoint: impl Into<String>, action: FaultAction) -> Self {
        FaultRule {
            id: None,
            endpoint: endpoint.into(),
            occurrence: 1,
            count: 1,
            direction: Direction::Request,
            action,
        }
    }

    pub fn on_response(mut self) -> Self {
        self.direction = Direction::Response;
        self
    }

    pub fn at(mut self, occurrence: u32) -> Self {
        self.occurrence = occurrence;
        self
    }

    pub fn times(mut self, count: u32) -> Self {
        self.count = count;
        self
    }
}

#[derive(Debug, thiserror::Error)]
#[error("bad endpoint glob `{glob}`: {source}")]
pub struct BadGlob {
    glob: String,
    source: globset::Error,
}

/// Keys and certificates the revoke and expire actions act on.
#[derive(Debug, Clone)]
pub struct PkiAuthority {
    pub certs: BTreeMap<u64, Certificate>,
    pub issuers: BTreeMap<PublicKeyId, KeyPair>,
    pub crls: CrlDirectory,
}

impl PkiAuthority {
    pub fn from_fixture(fixture: &PkiFixture, crls: CrlDirectory) -> Self {
        let mut authority = PkiAuthority {
            certs: BTreeMap::new(),
            issuers: BTreeMap::new(),
            crls,
        };
        for c in fixture.credentials() {
            authority.add(c.cert.clone(), Some(c.keys.clone()));
        }
        authority
    }

    pub fn add(&mut self, cert: Certificate, keys: Option<KeyPair>) {
        if let Some(keys) = keys {
            self.issuers.insert(cert.subject_key_id, keys);
        }
        self.certs.insert(cert.serial, cert);
    }

    pub fn expire(&self, serial: u64, clock: &Clock) -> bool {
        match self.certs.get(&serial) {
            Some(cert) => {
                clock.set(clock.now().max(cert.not_after + 1));
                true
            }
            None => false,
        }
    }

    pub fn revoke(&self, serial: u64, clock: &Clock) -> bool {
        let Some(cert) = self.certs.get(&serial) else {
            return false;
        };
        let Some(issuer) = self.issuers.get(&cert.authority_key_id) else {
            return false;
        };
        let now = clock.now();
        let mut serials = self
            .crls
            .get(&cert.authority_key_id)
            .map(|c| c.revoked_serials)
            .unwrap_or_default();
        serials.insert(serial);
        match issue_crl(issuer, now, now + PkiFixture::CRL_LIFETIME, serials) {
            Ok(crl) => {
                self.crls.publish(crl);
                true
            }
            Err(_) => false,
        }
    }
}

struct ArmedRule {
    id: String,
    rule: FaultRule,
    glob: GlobMatcher,
    seen: u32,
}

/// Result of pushing one message through the rules.
#[derive(Debug, Default)]
pub struct Applied {
    pub rule_ids: Vec<String>,
    pub dropped: bool,
}

pub struct FaultEngine {
    rules: Vec<ArmedRule>,
}

impl FaultEngine {
    pub fn new(rules: &[FaultRule]) -> Result<Self, BadGlob> {
        let rules = rules
            .iter()
            .enumerate()
            .map(|(i, rule)| {
                let glob = Glob::new(&rule.endpoint)
                    .map_err(|source| BadGlob {
                        glob: rule.endpoint.clone(),
                        source,
                    })?
                    .compile_matcher();
                Ok(ArmedRule {
                    id: rule.id.clone().unwrap_or_else(|| format!("rule-{}", i + 1)),
                    rule: rule.clone(),
                    glob,
                    seen: 0,
                })
            })
            .collect::<Result<_, BadGlob>>()?;
        Ok(FaultEngine { rules })
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn apply(
        &mut self,
        direction: Direction,
        endpoint: &str,
        bytes: &mut Vec<u8>,
        clock: &Clock,
        authority: Option<&PkiAuthority>,
    ) -> Applied {
        let mut applied = Applied::default();
        for armed in &mut self.rules {
            if armed.rule.direction != direction || !armed.glob.is_match(endpoint) {
                continue;
            }
            armed.seen += 1;
            let first = armed.rule.occurrence;
            if armed.seen < first || armed.seen >= first.saturating_add(armed.rule.count) {
                continue;
            }
            applied.rule_ids.push(armed.id.clone());
            match &armed.rule.action {
                FaultAction::Drop => applied.dropped = true,
                FaultAction::TamperByte { offset, xor } => {
                    if !bytes.is_empty() {
                        let at = offset % bytes.len();
                        bytes[at] ^= xor;
                    }
                }
                FaultAction::SwapField { field, value } => swap_field(bytes, field, value),
                FaultAction::DelayLogical(n) => {
                    clock.advance(*n);
                }
                FaultAction::ExpireCert(serial) => {
                    if let Some(a) = authority {
                        a.expire(*serial, clock);
                    }
                }
                FaultAction::Revoke(serial) => {
                    if let Some(a) = authority {
                        a.revoke(*serial, clock);
                    }
                }
            }
        }
        applied
    }
}

fn swap_field(bytes: &mut Vec<u8>, field: &str, value: &serde_json::Value) {
    let Ok(mut envelope) = Envelope::decode(bytes) else {
        return;
    };
    if envelope.format != WireFormat::Json {
        return;
    }
    let Ok(mut body) = serde_json::from_slice::<serde_json::Map<String, serde_json::Value>>(&envelope.body) else {
        return;
    };
    if let Some(slot) = body.get_mut(field) {
        *slot = value.clone();
        envelope.body = serde_json::to_vec(&body).expect("serializes");
        *bytes = envelope.encode();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_fires_on_selected_occurrences_only() {
        let rule = FaultRule::new("*/getEuiccChallenge", FaultAction::TamperByte { offset: 0, xor: 0xFF })
            .at(2)
            .times(2);
        let mut engine = FaultEngine::new(&[rule]).unwrap();
        let clock = Clock::at(0);
        let mut fired = Vec::new();
        for _ in 0..5 {
            let mut bytes = vec![0u8];
            engine.apply(Direction::Request, "/es10b/getEuiccChallenge", &mut bytes, &clock, None);
            fired.push(bytes[0] == 0xFF);
        }
        assert_eq!(fired, [false, true, true, false, false]);
    }

    #[test]
    fn direction_and_glob_filter() {
        let rule = FaultRule::new("/gsma/**", FaultAction::Drop).on_response();
        let mut engine = FaultEngine::new(&[rule]).unwrap();
        let clock = Clock::at(0);
        let mut b = vec![];
        assert!(!engine.apply(Direction::Request, "/gsma/x", &mut b, &clock, None).dropped);
        assert!(!engine.apply(Direction::Response, "/es10b/x", &mut b, &clock, None).dropped);
        assert!(engine.apply(Direction::Response, "/gsma/x", &mut b, &clock, None).dropped);
    }

    #[test]
    fn rules_parse_from_json() {
        let rules: Vec<FaultRule> = serde_json::from_str(
            r#"[{"endpoint":"*/loadBoundProfilePackage","action":"drop"},
                {"action":{"tamperByte":{"offset":12}},"direction":"response"},
                {"action":{"revoke":10}}]"#,
        )
        .unwrap();
        assert_eq!(rules[0].action, FaultAction::Drop);
        assert_eq!(rules[1].action, FaultAction::TamperByte { offset: 12, xor: 1 });
        assert_eq!(rules[1].endpoint, "*");
        assert_eq!(rules[2].action, FaultAction::Revoke(10));
    }

    #[test]
    fn delay_moves_the_clock() {
        let mut engine = FaultEngine::new(&[FaultRule::new("*", FaultAction::DelayLogical(30))]).unwrap();
        let clock = Clock::at(100);
        engine.apply(Direction::Request, "/x", &mut vec![], &clock, None);
        assert_eq!(clock.now(), 130);
    }
}
