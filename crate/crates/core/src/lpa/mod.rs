//! Local Profile Assistant: drives mutual authentication and profile
//! download between an eUICC and an SM-DP+.
//!
//! The protocol logic lives in [`Flow`], which never talks to the SM-DP+
//! itself: it returns each ES9+ request as a [`Step`] and is resumed with
//! the reply. The direct LPA below sends those requests over the transport;
//! the IPA in the eIM module hands them to the eIM instead.

mod flow;
mod rules;

pub use flow::{Flow, FlowKind, Step};
pub use rules::{check_profile_rules, RulePolicy};

use std::sync::Arc;

use thiserror::Error;

use crate::harness::{Transport, TransportError};
use crate::messages::*;
use crate::pki::PublicKeyId;
use crate::tlv::{CodecError, TlvCodec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Consent {
    Accept,
    Reject,
    Postpone,
}

/// End-user confirmation of a profile download.
pub type ConsentHook = Arc<dyn Fn(&ProfileMetadata) -> Consent + Send + Sync>;

pub fn always(consent: Consent) -> ConsentHook {
    Arc::new(move |_| consent)
}

#[derive(Clone)]
pub struct LpaConfig {
    /// Only servers chaining to this CI root are accepted.
    pub allowed_root: Option<PublicKeyId>,
    pub default_smdp_address: Option<String>,
    pub time_check_enabled: bool,
    pub enforce_profile_rules: bool,
    pub lpr_supported: bool,
    pub capability: RspCapability,
    pub tac: String,
    pub confirmation_code: Option<String>,
    pub consent: ConsentHook,
}

impl Default for LpaConfig {
    fn default() -> Self {
        LpaConfig {
            allowed_root: None,
            default_smdp_address: None,
            time_check_enabled: true,
            enforce_profile_rules: true,
            lpr_supported: false,
            capability: RspCapability::CRL_STAPLING_V3_SUPPORT | RspCapability::CANCEL_FOR_EMPTY_SPN_PN_SUPPORT,
            tac: "35290611".into(),
            confirmation_code: None,
            consent: always(Consent::Accept),
        }
    }
}

impl std::fmt::Debug for LpaConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LpaConfig")
            .field("allowed_root", &self.allowed_root)
            .field("default_smdp_address", &self.default_smdp_address)
            .field("time_check_enabled", &self.time_check_enabled)
            .field("enforce_profile_rules", &self.enforce_profile_rules)
            .field("lpr_supported", &self.lpr_supported)
            .field("capability", &self.capability)
            .finish_non_exhaustive()
    }
}

/// Where the LPA learns the SM-DP+ address and the order to ask for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DownloadSource {
    ActivationCode(ActivationCode),
    DefaultSmdp,
    /// Already resolved, as after an SM-DS lookup.
    Resolved { smdp_address: String, matching_id: String },
}

#[derive(Debug, Error)]
pub enum Es10Error {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("eUICC refused the call: {0:?}")]
    Refused(FunctionStatus),
    #[error("undecodable eUICC response: {0}")]
    Codec(#[from] CodecError),
}

/// Typed ES10b calls from a device-side caller to its eUICC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Es10Client {
    pub from: String,
    pub euicc: String,
}

impl Es10Client {
    pub fn new(from: impl Into<String>, euicc: impl Into<String>) -> Self {
        Es10Client {
            from: from.into(),
            euicc: euicc.into(),
        }
    }

    pub fn call<Req: TlvCodec, Resp: TlvCodec>(
        &self,
        net: &Transport,
        endpoint: &str,
        request: &Req,
    ) -> Result<Resp, Es10Error> {
        let envelope = Envelope::request(WireFormat::Compact, endpoint, &self.euicc, request.to_tlv());
        let response = net.send(&self.from, &self.euicc, &envelope)?;
        match response.status() {
            Some(FunctionStatus::Success) => Ok(Resp::from_tlv(&response.body)?),
            Some(status) => Err(Es10Error::Refused(status.clone())),
            None => Err(Es10Error::Refused(crate::harness::undefined_error())),
        }
    }
}

/// Sends one ES9+ request as JSON and decodes the reply.
pub fn call_smdp(net: &Transport, from: &str, smdp_address: &str, request: &Es9Request) -> Result<Es9Reply, String> {
    let function = request.function();
    let envelope = Envelope::request(
        WireFormat::Json,
        &function.endpoint(),
        smdp_address,
        request.encode(WireFormat::Json),
    );
    let response = net.send(from, smdp_address, &envelope).map_err(|e| e.to_string())?;
    let status = response.status().cloned().ok_or("response without status")?;
    Es9Reply::from_parts(function, WireFormat::Json, &status, &response.body).map_err(|e| e.to_string())
}

/// The consumer-device LPA talking to the SM-DP+ directly.
#[derive(Debug, Clone)]
pub struct Lpa {
    pub address: String,
    pub euicc: String,
    pub config: LpaConfig,
}

impl Lpa {
    pub fn new(address: impl Into<String>, euicc: impl Into<String>, config: LpaConfig) -> Self {
        Lpa {
            address: address.into(),
            euicc: euicc.into(),
            config,
        }
    }

    pub fn run_profile_download(&self, net: &Transport, source: DownloadSource) -> FlowReport {
        self.run(net, source, FlowKind::Download)
    }

    /// Mutual authentication only; ends after the SM-DP+ accepts the eUICC.
    pub fn run_common_mutual_auth(&self, net: &Transport, source: DownloadSource) -> FlowReport {
        self.run(net, source, FlowKind::AuthenticateOnly)
    }

    fn run(&self, net: &Transport, source: DownloadSource, kind: FlowKind) -> FlowReport {
        let mut flow = match Flow::new(Es10Client::new(&self.address, &self.euicc), self.config.clone(), source, kind) {
            Ok(flow) => flow,
            Err(report) => return report,
        };
        let mut step = flow.start(net);
        loop {
            match step {
                Step::Done(report) => return report,
                Step::Call(request) => {
                    let reply = call_smdp(net, &self.address, flow.smdp_address(), &request);
                    step = flow.resume(net, reply);
                }
            }
        }
    }
}
