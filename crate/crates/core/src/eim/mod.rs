//! eSIM IoT remote manager and the IPA it drives on each device.
//!
//! The eIM signs eIM configuration operations, pushes activation codes and
//! runs assisted downloads. In an assisted download it owns the SM-DP+
//! exchange: it forwards each ES9+ request the IPA hands it, re-encoding
//! between the device's transport mode and the JSON envelope, and never
//! looks inside the signed payloads.

mod ipa;

pub use ipa::Ipa;

use crate::harness::Transport;
use crate::lpa::call_smdp;
use crate::messages::*;
use crate::pki::KeyPair;
use crate::tlv::TlvCodec;

fn stage_of(function: Es9Function) -> Stage {
    match function {
        Es9Function::InitiateAuthentication => Stage::InitiateAuth,
        Es9Function::AuthenticateClient => Stage::AuthenticateClient,
        Es9Function::GetBoundProfilePackage => Stage::GetBpp,
        Es9Function::HandleNotification => Stage::HandleNotification,
        Es9Function::CancelSession => Stage::CancelSession,
    }
}

#[derive(Debug, Clone)]
pub struct Eim {
    pub id: String,
    pub address: String,
    keys: KeyPair,
    counter: u32,
    /// Encoding on the ESipa link.
    pub format: WireFormat,
}

impl Eim {
    pub fn new(id: impl Into<String>, address: impl Into<String>, keys: KeyPair, format: WireFormat) -> Self {
        Eim {
            id: id.into(),
            address: address.into(),
            keys,
            counter: 0,
            format,
        }
    }

    pub fn configuration_data(&self) -> EimConfigurationData {
        EimConfigurationData {
            eim_id: self.id.clone(),
            eim_public_key: *self.keys.public_key(),
            eim_address: self.address.clone(),
        }
    }

    /// Signs the next operation; every call uses a fresh counter value.
    pub fn sign_operation(&mut self, kind: EimOperationKind, new_config: Option<EimConfigurationData>) -> SignedEimOperation {
        self.counter += 1;
        let operation = EimOperation {
            kind,
            eim_id: self.id.clone(),
            counter: self.counter,
            new_config,
        };
        let signature = self.keys.sign(&operation.to_tlv());
        SignedEimOperation { operation, signature }
    }

    fn call_ipa(&self, net: &Transport, device: &str, name: &str, body: Vec<u8>) -> Result<Envelope, FlowReport> {
        let request = Envelope::request(self.format, esipa_endpoint(name), device, body);
        let response = net
            .send(&self.address, device, &request)
            .map_err(|e| FlowReport::error(Stage::Ipa, None, "transportFailure").with_detail(e.to_string()))?;
        match response.status() {
            Some(FunctionStatus::Success) => Ok(response),
            Some(FunctionStatus::Failed { reason_code, message }) => {
                Err(FlowReport::error(Stage::Ipa, Some(*reason_code), message.clone()))
            }
            None => Err(FlowReport::error(Stage::Ipa, None, "noStatus")),
        }
    }

    pub fn configure(&self, net: &Transport, device: &str, request: EimConfigRequest) -> Result<EimConfigResult, FlowReport> {
        let body = encode_body(self.format, &EsipaEimConfig { request });
        let response = self.call_ipa(net, device, EIM_CONFIGURATION, body)?;
        decode_body(self.format, &response.body)
            .map_err(|e| FlowReport::error(Stage::EimConfig, None, "badResponse").with_detail(e.to_string()))
    }

    /// Hands an activation code to the device, which downloads on its own.
    pub fn push_activation_code(&self, net: &Transport, device: &str, activation_code: &str) -> FlowReport {
        let body = encode_body(
            self.format,
            &PushActivationCode {
                activation_code: activation_code.to_string(),
            },
        );
        match self.call_ipa(net, device, PUSH_ACTIVATION_CODE, body) {
            Ok(response) => decode_body(self.format, &response.body).unwrap_or_else(|e| {
                FlowReport::error(Stage::Ipa, None, "badResponse").with_detail(e.to_string())
            }),
            Err(report) => report,
        }
    }

    /// Runs a download on the device's behalf, relaying between the IPA and
    /// the SM-DP+ until the IPA reports the end of the flow.
    pub fn assisted_download(&self, net: &Transport, device: &str, activation_code: &str) -> FlowReport {
        let ac = match ActivationCode::parse(activation_code) {
            Ok(ac) => ac,
            Err(e) => {
                return FlowReport::error(Stage::ActivationCode, None, "badActivationCode").with_detail(e.to_string())
            }
        };
        let start = IpaInitiateDownload {
            smdp_address: ac.smdp_address.clone(),
            matching_id: ac.matching_id.clone(),
        };
        let mut response = match self.call_ipa(net, device, INITIATE_DOWNLOAD, encode_body(self.format, &start)) {
            Ok(r) => r,
            Err(report) => return report,
        };
        loop {
            let step = match IpaStep::decode(self.format, &response.body) {
                Ok(step) => step,
                Err(e) => return FlowReport::error(Stage::Ipa, None, "badResponse").with_detail(e.to_string()),
            };
            let request = match step {
                IpaStep::Finished(report) => return report,
                IpaStep::Next(request) => request,
            };
            let function = request.function();
            let reply = match call_smdp(net, &self.address, &ac.smdp_address, &request) {
                Ok(reply) => reply,
                Err(e) => {
                    return FlowReport::error(stage_of(function), None, "transportFailure")
                        .with_transaction(request.transaction_id())
                        .with_detail(e)
                }
            };
            let body = encode_relayed_reply(&reply, self.format);
            response = match self.call_ipa(net, device, function.name(), body) {
                Ok(r) => r,
                Err(report) => return report.with_transaction(request.transaction_id()),
            };
        }
    }
}
