//! Scenario files: one JSON document fixing the seed, the actors, the
//! orders, the faults and the flow to run, plus what the run should end in.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::eim::{Eim, Ipa};
use crate::euicc::{Euicc, EuiccConfig, ProfileState};
use crate::lpa::{Consent, DownloadSource, Lpa, LpaConfig};
use crate::messages::*;
use crate::pki::{derive_key_seed, generate_keypair, CrlDirectory, PkiFixture};
use crate::smdp::{BppLogEntry, Es2Notification, OrderSpec, OrderState, Smdp, SmdpConfig};

use super::{BadGlob, FaultRule, PkiAuthority, TranscriptEntry, Transport};

/// Logical time at which every scenario starts: one day into the fixture
/// validity window.
pub const SCENARIO_START: u64 = PkiFixture::EPOCH + 86_400;
pub const DEFAULT_SMDP_ADDRESS: &str = "smdp.example.com";
pub const EIM_ADDRESS: &str = "eim.example.com";
pub const EIM_ID: &str = "eim-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowName {
    #[serde(rename = "auth")]
    Auth,
    #[serde(rename = "download-ac")]
    DownloadAc,
    #[serde(rename = "download-default")]
    DownloadDefault,
    #[serde(rename = "iot-push")]
    IotPush,
    #[serde(rename = "iot-assisted")]
    IotAssisted,
    #[serde(rename = "eim-config")]
    EimConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct LpaSettings {
    /// Restrict servers to the fixture CI root.
    pub restrict_root: bool,
    pub time_check_enabled: bool,
    pub enforce_profile_rules: bool,
    pub lpr_supported: bool,
    pub consent: Consent,
    pub confirmation_code: Option<String>,
    pub capability: RspCapability,
}

impl Default for LpaSettings {
    fn default() -> Self {
        let base = LpaConfig::default();
        LpaSettings {
            restrict_root: true,
            time_check_enabled: base.time_check_enabled,
            enforce_profile_rules: base.enforce_profile_rules,
            lpr_supported: base.lpr_supported,
            consent: Consent::Accept,
            confirmation_code: None,
            capability: base.capability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Preinstalled {
    pub metadata: ProfileMetadata,
    #[serde(default)]
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct EuiccSettings {
    /// PPR combinations the rules authorisation table allows.
    pub rat: Vec<Pprs>,
    pub free_nvm: u32,
    pub capability: RspCapability,
    /// Also trust the independent root for server verification.
    pub trust_alt_root: bool,
    /// Trust only the independent root.
    pub only_alt_root: bool,
    pub preinstalled: Vec<Preinstalled>,
}

impl Default for EuiccSettings {
    fn default() -> Self {
        let base = EuiccConfig::new("", PkiFixture::generate(0).euicc, Vec::new());
        EuiccSettings {
            rat: Vec::new(),
            free_nvm: base.free_nvm,
            capability: base.capability,
            trust_alt_root: false,
            only_alt_root: false,
            preinstalled: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SmdpSettings {
    pub address: String,
    pub eligible: bool,
    pub cc_retry_limit: u32,
}

impl Default for SmdpSettings {
    fn default() -> Self {
        SmdpSettings {
            address: DEFAULT_SMDP_ADDRESS.into(),
            eligible: true,
            cc_retry_limit: crate::smdp::DEFAULT_CC_RETRY_LIMIT,
        }
    }
}

/// One step of an eIM configuration scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EimStep {
    /// Association through the IPA.
    Add,
    /// Signed replacement of the configuration by the associated eIM.
    Replace,
    /// Same, signed by a key the eUICC does not know.
    ReplaceWrongKey,
    /// The last signed operation again.
    Replay,
    SignedRemove,
    Remove,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Expectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<CancelSessionReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<u8>,
    /// State of the first order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_state: Option<OrderState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eim_statuses: Option<Vec<EimConfigStatus>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub flow: FlowName,
    /// Seeds every actor's randomness, and the PKI unless `fixtureSeed` is set.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_seed: Option<u64>,
    /// Encoding on the eIM to IPA link.
    #[serde(default = "default_transport_mode")]
    pub transport_mode: WireFormat,
    #[serde(default = "default_devices")]
    pub devices: u32,
    #[serde(default)]
    pub smdp: SmdpSettings,
    #[serde(default = "default_orders")]
    pub orders: Vec<OrderSpec>,
    /// Links an order (by matching id) to the EID of device `n`.
    #[serde(default)]
    pub links: BTreeMap<String, u32>,
    /// Defaults to the SM-DP+ address and the first order.
    #[serde(default)]
    pub activation_code: Option<String>,
    #[serde(default)]
    pub lpa: LpaSettings,
    #[serde(default)]
    pub euicc: EuiccSettings,
    /// How many times the flow is run; later runs see earlier state.
    #[serde(default = "default_attempts")]
    pub attempts: u32,
    #[serde(default)]
    pub faults: Vec<FaultRule>,
    #[serde(default)]
    pub eim_steps: Vec<EimStep>,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

fn default_transport_mode() -> WireFormat {
    WireFormat::Json
}

fn default_devices() -> u32 {
    1
}

fn default_attempts() -> u32 {
    1
}

pub const DEFAULT_ICCID: &str = "8944500102198304826";
pub const DEFAULT_MATCHING_ID: &str = "MATCH-001";

pub fn default_metadata() -> ProfileMetadata {
    ProfileMetadata {
        iccid: Iccid::from_digits(DEFAULT_ICCID).expect("valid ICCID"),
        profile_name: "Travel Data".into(),
        service_provider_name: "Operator One".into(),
        pprs: Pprs::empty(),
        lpr_config_present: false,
    }
}

fn default_orders() -> Vec<OrderSpec> {
    vec![OrderSpec::new(DEFAULT_MATCHING_ID, default_metadata())]
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Fault(#[from] BadGlob),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn new(name: impl Into<String>, flow: FlowName) -> Self {
        ScenarioSpec {
            name: name.into(),
            flow,
            seed: 0,
            fixture_seed: None,
            transport_mode: default_transport_mode(),
            devices: 1,
            smdp: SmdpSettings::default(),
            orders: default_orders(),
            links: BTreeMap::new(),
            activation_code: None,
            lpa: LpaSettings::default(),
            euicc: EuiccSettings::default(),
            attempts: 1,
            faults: Vec::new(),
            eim_steps: Vec::new(),
            expect: None,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.devices == 0 {
            return Err(ScenarioError::Invalid("at least one device is needed".into()));
        }
        if self.attempts == 0 {
            return Err(ScenarioError::Invalid("attempts must be at least 1".into()));
        }
        for (id, device) in &self.links {
            if !self.orders.iter().any(|o| &o.matching_id == id) {
                return Err(ScenarioError::Invalid(format!("link names unknown order {id}")));
            }
            if *device == 0 || *device > self.devices {
                return Err(ScenarioError::Invalid(format!("link to device {device} out of range")));
            }
        }
        Ok(())
    }

    /// Order-to-device links. A default SM-DP+ run with no explicit links
    /// binds the first order to device 1, since no matching id is sent.
    pub fn effective_links(&self) -> BTreeMap<String, u32> {
        if self.links.is_empty() && self.flow == FlowName::DownloadDefault {
            if let Some(order) = self.orders.first() {
                return BTreeMap::from([(order.matching_id.clone(), 1)]);
            }
        }
        self.links.clone()
    }

    pub fn activation_code(&self) -> String {
        self.activation_code.clone().unwrap_or_else(|| {
            let matching_id = self.orders.first().map_or(DEFAULT_MATCHING_ID, |o| o.matching_id.as_str());
            ActivationCode::new(&self.smdp.address, matching_id).to_string()
        })
    }
}

/// The address conventions for device `n` (1-based).
pub fn device_address(n: u32) -> String {
    format!("dev-{n}")
}

pub fn lpa_address(n: u32) -> String {
    format!("lpa.dev-{n}")
}

pub fn euicc_address(n: u32) -> String {
    format!("euicc.dev-{n}")
}

pub struct Device {
    pub euicc: Arc<Mutex<Euicc>>,
    pub lpa: Lpa,
    pub ipa: Arc<Mutex<Ipa>>,
}

/// Every actor of one scenario, wired to one transport.
pub struct World {
    pub spec: ScenarioSpec,
    pub fixture: PkiFixture,
    pub clock: Clock,
    pub crls: CrlDirectory,
    pub net: Transport,
    pub smdp: Arc<Mutex<Smdp>>,
    pub devices: Vec<Device>,
    pub eim: Eim,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OrderView {
    pub matching_id: String,
    pub iccid: Iccid,
    pub state: OrderState,
    pub download_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProfileView {
    pub iccid: Iccid,
    pub profile_name: String,
    pub state: ProfileState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EuiccView {
    pub eid: Eid,
    pub profiles: Vec<ProfileView>,
    pub pending_notifications: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eim_id: Option<String>,
}

/// What a run produced, as printed by the CLI.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub flow: FlowName,
    pub report: FlowReport,
    pub attempts: Vec<FlowReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eim_statuses: Vec<EimConfigStatus>,
    pub orders: Vec<OrderView>,
    pub operator_log: Vec<Es2Notification>,
    pub bpp_log: Vec<BppLogEntry>,
    pub euicc: EuiccView,
    pub transcript_entries: usize,
}

impl World {
    pub fn build(spec: &ScenarioSpec) -> Result<World, ScenarioError> {
        spec.validate()?;
        let seed = spec.seed;
        let fixture = PkiFixture::generate(spec.fixture_seed.unwrap_or(seed));
        let clock = Clock::at(SCENARIO_START);
        let crls = CrlDirectory::default();
        for crl in &fixture.crls {
            crls.publish(crl.clone());
        }
        let net = Transport::new(clock.clone());
        let mut authority = PkiAuthority::from_fixture(&fixture, crls.clone());
        let links = spec.effective_links();

        let mut smdp_config = SmdpConfig::new(&spec.smdp.address, fixture.dpauth.clone(), fixture.dppb.clone());
        smdp_config.trusted_roots = vec![fixture.ci.cert.clone(), fixture.ci_alt.cert.clone()];
        smdp_config.crls = crls.clone();
        smdp_config.cc_retry_limit = spec.smdp.cc_retry_limit;
        smdp_config.rng_seed = seed;
        if !spec.smdp.eligible {
            smdp_config.eligibility = Some(Arc::new(|_, _| false));
        }
        let mut smdp = Smdp::new(smdp_config, clock.clone());

        let mut devices = Vec::new();
        for n in 1..=spec.devices {
            let credential = fixture.extra_euicc(n - 1);
            authority.add(credential.cert.clone(), None);
            let mut config = EuiccConfig::new(euicc_address(n), credential, vec![fixture.eum.cert.clone()]);
            config.trusted_roots = match (spec.euicc.only_alt_root, spec.euicc.trust_alt_root) {
                (true, _) => vec![fixture.ci_alt.cert.clone()],
                (false, true) => vec![fixture.ci.cert.clone(), fixture.ci_alt.cert.clone()],
                (false, false) => vec![fixture.ci.cert.clone()],
            };
            config.capability = spec.euicc.capability;
            config.rat = Rat {
                rules: spec.euicc.rat.iter().map(|p| RatRule { allowed_pprs: *p }).collect(),
            };
            config.free_nvm = spec.euicc.free_nvm;
            config.rng_seed = seed;
            let mut euicc = Euicc::new(config, clock.clone());
            for p in &spec.euicc.preinstalled {
                let state = if p.enabled { ProfileState::Enabled } else { ProfileState::Disabled };
                euicc.preinstall(p.metadata.clone(), state);
            }
            let eid = euicc.eid();
            for order in &spec.orders {
                if links.get(&order.matching_id) == Some(&n) {
                    let mut linked = order.clone();
                    linked.eid = Some(eid);
                    smdp.add_order(linked);
                }
            }

            let lpa_config = LpaConfig {
                allowed_root: spec.lpa.restrict_root.then(|| fixture.ci.key_id()),
                default_smdp_address: Some(spec.smdp.address.clone()),
                time_check_enabled: spec.lpa.time_check_enabled,
                enforce_profile_rules: spec.lpa.enforce_profile_rules,
                lpr_supported: spec.lpa.lpr_supported,
                capability: spec.lpa.capability,
                confirmation_code: spec.lpa.confirmation_code.clone(),
                consent: crate::lpa::always(spec.lpa.consent),
                ..LpaConfig::default()
            };
            let euicc = Arc::new(Mutex::new(euicc));
            let ipa = Arc::new(Mutex::new(Ipa::new(device_address(n), euicc_address(n), lpa_config.clone())));
            net.route(euicc.clone());
            net.route(ipa.clone());
            devices.push(Device {
                euicc,
                lpa: Lpa::new(lpa_address(n), euicc_address(n), lpa_config),
                ipa,
            });
        }
        for order in &spec.orders {
            if !links.contains_key(&order.matching_id) {
                smdp.add_order(order.clone());
            }
        }
        let smdp = Arc::new(Mutex::new(smdp));
        net.route(smdp.clone());
        net.set_authority(authority);
        net.set_faults(&spec.faults)?;

        let eim = Eim::new(EIM_ID, EIM_ADDRESS, fixture.eim.keys.clone(), spec.transport_mode);
        Ok(World {
            spec: spec.clone(),
            fixture,
            clock,
            crls,
            net,
            smdp,
            devices,
            eim,
        })
    }

    pub fn euicc(&self, n: u32) -> std::sync::MutexGuard<'_, Euicc> {
        self.devices[(n - 1) as usize].euicc.lock().expect("euicc lock")
    }

    pub fn smdp(&self) -> std::sync::MutexGuard<'_, Smdp> {
        self.smdp.lock().expect("smdp lock")
    }

    /// Runs the scenario's flow on device 1 `attempts` times.
    pub fn run(&mut self) -> RunSummary {
        let mut attempts = Vec::new();
        let mut eim_statuses = Vec::new();
        for _ in 0..self.spec.attempts {
            let first = self.net.transcript().len() as u64 + 1;
            let mut report = match self.spec.flow {
                FlowName::EimConfig => {
                    let (report, statuses) = self.run_eim_config();
                    eim_statuses = statuses;
                    report
                }
                _ => self.run_download(1),
            };
            let last = self.net.transcript().len() as u64;
            report.transcript_ref = format!("seq {first}-{last}");
            attempts.push(report);
        }
        self.summary(attempts, eim_statuses)
    }

    /// One download or authentication flow on device `n`.
    pub fn run_download(&mut self, n: u32) -> FlowReport {
        let spec = &self.spec;
        let ac_text = spec.activation_code();
        let device = &self.devices[(n - 1) as usize];
        let net = &self.net;
        let parsed = || ActivationCode::parse(&ac_text);
        match spec.flow {
            FlowName::Auth => match parsed() {
                Ok(ac) => device.lpa.run_common_mutual_auth(net, DownloadSource::ActivationCode(ac)),
                Err(e) => bad_ac(e),
            },
            FlowName::DownloadAc => match parsed() {
                Ok(ac) => device.lpa.run_profile_download(net, DownloadSource::ActivationCode(ac)),
                Err(e) => bad_ac(e),
            },
            FlowName::DownloadDefault => device.lpa.run_profile_download(net, DownloadSource::DefaultSmdp),
            FlowName::IotPush => self.eim.push_activation_code(net, &device_address(n), &ac_text),
            FlowName::IotAssisted => self.eim.assisted_download(net, &device_address(n), &ac_text),
            FlowName::EimConfig => self.run_eim_config().0,
        }
    }

    fn run_eim_config(&mut self) -> (FlowReport, Vec<EimConfigStatus>) {
        let device = device_address(1);
        let rogue_keys = generate_keypair(derive_key_seed(self.spec.seed, "rogue-eim"));
        let mut rogue = Eim::new(EIM_ID, EIM_ADDRESS, rogue_keys, self.spec.transport_mode);
        let mut last_signed = None;
        let mut statuses = Vec::new();
        for step in self.spec.eim_steps.clone() {
            let request = match step {
                EimStep::Add => EimConfigRequest::Add(self.eim.configuration_data()),
                EimStep::Replace => {
                    let op = self.eim.sign_operation(EimOperationKind::Replace, Some(self.eim.configuration_data()));
                    last_signed = Some(op.clone());
                    EimConfigRequest::Signed(op)
                }
                EimStep::ReplaceWrongKey => {
                    let data = rogue.configuration_data();
                    EimConfigRequest::Signed(rogue.sign_operation(EimOperationKind::Replace, Some(data)))
                }
                EimStep::SignedRemove => {
                    let op = self.eim.sign_operation(EimOperationKind::Remove, None);
                    last_signed = Some(op.clone());
                    EimConfigRequest::Signed(op)
                }
                EimStep::Replay => match &last_signed {
                    Some(op) => EimConfigRequest::Signed(op.clone()),
                    None => {
                        let report = FlowReport::error(Stage::EimConfig, None, "nothingToReplay");
                        return (report, statuses);
                    }
                },
                EimStep::Remove => EimConfigRequest::Remove(()),
            };
            match self.eim.configure(&self.net, &device, request) {
                Ok(result) => statuses.push(result.status),
                Err(report) => return (report, statuses),
            }
        }
        let names: Vec<&str> = statuses.iter().map(|s| s.name()).collect();
        let report = FlowReport::new(Outcome::EimConfigured).with_detail(names.join(","));
        (report, statuses)
    }

    pub fn summary(&self, attempts: Vec<FlowReport>, eim_statuses: Vec<EimConfigStatus>) -> RunSummary {
        let smdp = self.smdp();
        let euicc = self.euicc(1);
        RunSummary {
            scenario: self.spec.name.clone(),
            seed: self.spec.seed,
            flow: self.spec.flow,
            report: attempts.last().cloned().expect("at least one attempt"),
            attempts,
            eim_statuses,
            orders: smdp
                .orders()
                .map(|o| OrderView {
                    matching_id: o.matching_id.clone(),
                    iccid: o.iccid,
                    state: o.state,
                    download_attempts: o.download_attempts,
                })
                .collect(),
            operator_log: smdp.operator_log().to_vec(),
            bpp_log: smdp.bpp_log().to_vec(),
            euicc: EuiccView {
                eid: euicc.eid(),
                profiles: euicc
                    .profiles()
                    .iter()
                    .map(|p| ProfileView {
                        iccid: p.iccid,
                        profile_name: p.metadata.profile_name.clone(),
                        state: p.state,
                    })
                    .collect(),
                pending_notifications: euicc.notifications().len(),
                eim_id: euicc.eim_config().map(|c| c.eim_id.clone()),
            },
            transcript_entries: self.net.transcript().len(),
        }
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.net.transcript()
    }
}

fn bad_ac(e: BadActivationCode) -> FlowReport {
    FlowReport::error(Stage::ActivationCode, None, "badActivationCode").with_detail(e.to_string())
}

impl RunSummary {
    /// Differences between the run and the expectation. With no expectation
    /// the run must have installed a profile (or configured the eIM).
    pub fn check(&self, expect: Option<&Expectation>) -> Vec<String> {
        let report = &self.report;
        let Some(expect) = expect else {
            return match report.outcome {
                Outcome::Installed | Outcome::EimConfigured | Outcome::Authenticated => Vec::new(),
                other => vec![format!("outcome {} is not a success", other.name())],
            };
        };
        let mut misses = Vec::new();
        let mut compare = |what: &str, want: Option<String>, got: Option<String>| {
            if let Some(want) = want {
                if Some(&want) != got.as_ref() {
                    misses.push(format!("{what}: expected {want}, got {}", got.unwrap_or_else(|| "nothing".into())));
                }
            }
        };
        compare(
            "outcome",
            expect.outcome.map(|o| o.name().into()),
            Some(report.outcome.name().into()),
        );
        compare(
            "reason",
            expect.reason.map(|r| r.name().into()),
            report.reason.map(|r| r.name().into()),
        );
        compare(
            "stage",
            expect.stage.map(|s| s.name().into()),
            report.stage.map(|s| s.name().into()),
        );
        compare(
            "code",
            expect.code.map(|c| c.to_string()),
            report.code.map(|c| c.to_string()),
        );
        compare(
            "order state",
            expect.order_state.map(|s| s.name().into()),
            self.orders.first().map(|o| o.state.name().into()),
        );
        let names = |s: &[EimConfigStatus]| s.iter().map(|x| x.name()).collect::<Vec<_>>().join(",");
        compare(
            "eIM statuses",
            expect.eim_statuses.as_deref().map(names),
            Some(names(&self.eim_statuses)),
        );
        misses
    }
}
