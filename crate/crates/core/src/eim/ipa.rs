use crate::harness::{invalid_input, undefined_error, Actor, Transport};
use crate::lpa::{DownloadSource, Es10Client, Flow, FlowKind, Lpa, LpaConfig, Step};
use crate::messages::es10_endpoint as ep;
use crate::messages::*;

/// The IoT device's profile assistant. It owns the ES10b link to the
/// eUICC and keeps one download flow open between eIM calls.
pub struct Ipa {
    address: String,
    euicc: String,
    config: LpaConfig,
    flow: Option<Flow>,
}

impl Ipa {
    pub fn new(address: impl Into<String>, euicc: impl Into<String>, config: LpaConfig) -> Self {
        Ipa {
            address: address.into(),
            euicc: euicc.into(),
            config,
            flow: None,
        }
    }

    fn es10(&self) -> Es10Client {
        Es10Client::new(&self.address, &self.euicc)
    }

    fn step(&mut self, step: Step) -> IpaStep {
        match step {
            Step::Call(request) => IpaStep::Next(request),
            Step::Done(report) => {
                self.flow = None;
                IpaStep::Finished(report)
            }
        }
    }

    fn initiate(&mut self, net: &Transport, start: IpaInitiateDownload) -> IpaStep {
        let source = DownloadSource::Resolved {
            smdp_address: start.smdp_address,
            matching_id: start.matching_id,
        };
        match Flow::new(self.es10(), self.config.clone(), source, FlowKind::Download) {
            Ok(mut flow) => {
                let step = flow.start(net);
                self.flow = Some(flow);
                self.step(step)
            }
            Err(report) => IpaStep::Finished(report),
        }
    }

    fn relay(&mut self, net: &Transport, reply: Es9Reply) -> IpaStep {
        match self.flow.as_mut() {
            Some(flow) => {
                let step = flow.resume(net, Ok(reply));
                self.step(step)
            }
            None => IpaStep::Finished(FlowReport::error(Stage::Ipa, None, "noDownloadInProgress")),
        }
    }

    fn push_activation_code(&self, net: &Transport, push: PushActivationCode) -> FlowReport {
        match ActivationCode::parse(&push.activation_code) {
            Ok(ac) => Lpa::new(&self.address, &self.euicc, self.config.clone())
                .run_profile_download(net, DownloadSource::ActivationCode(ac)),
            Err(e) => FlowReport::error(Stage::ActivationCode, None, "badActivationCode").with_detail(e.to_string()),
        }
    }
}

fn reply(format: WireFormat, body: Vec<u8>) -> Envelope {
    Envelope::response(format, FunctionStatus::Success, body)
}

impl Actor for Ipa {
    fn address(&self) -> &str {
        &self.address
    }

    fn handle(&mut self, net: &Transport, request: &Envelope) -> Envelope {
        let format = request.format;
        let bad_input = || Envelope::response(format, invalid_input(), Vec::new());
        let Some(name) = request.endpoint().and_then(|e| e.strip_prefix(ESIPA_PREFIX)) else {
            return Envelope::response(format, undefined_error(), Vec::new());
        };
        match name {
            INITIATE_DOWNLOAD => match decode_body(format, &request.body) {
                Ok(start) => reply(format, self.initiate(net, start).encode(format)),
                Err(_) => bad_input(),
            },
            PUSH_ACTIVATION_CODE => match decode_body(format, &request.body) {
                Ok(push) => reply(format, encode_body(format, &self.push_activation_code(net, push))),
                Err(_) => bad_input(),
            },
            EIM_CONFIGURATION => match decode_body::<EsipaEimConfig>(format, &request.body) {
                Ok(config) => match self.es10().call::<_, EimConfigResult>(net, ep::EIM_CONFIGURATION, &config.request) {
                    Ok(result) => reply(format, encode_body(format, &result)),
                    Err(_) => Envelope::response(format, undefined_error(), Vec::new()),
                },
                Err(_) => bad_input(),
            },
            other => match Es9Function::from_name(other) {
                Some(function) => match decode_relayed_reply(function, format, &request.body) {
                    Ok(es9) => reply(format, self.relay(net, es9).encode(format)),
                    Err(_) => bad_input(),
                },
                None => Envelope::response(format, undefined_error(), Vec::new()),
            },
        }
    }
}
