use serde::{Deserialize, Serialize};

use super::{CancelSessionReason, TransactionId};

wire_enum! {
    pub enum Outcome {
        Installed = 0 => "installed",
        Cancelled = 1 => "cancelled",
        Error = 2 => "error",
        /// Mutual authentication finished; no download was requested.
        Authenticated = 3 => "authenticated",
        EimConfigured = 4 => "eimConfigured",
    }
}

wire_enum! {
    /// Where a flow stopped.
    pub enum Stage {
        ActivationCode = 0 => "activationCode",
        EuiccInfo = 1 => "euiccInfo",
        Challenge = 2 => "challenge",
        InitiateAuth = 3 => "initiateAuth",
        AuthenticateServer = 4 => "authenticateServer",
        AuthenticateClient = 5 => "authenticateClient",
        PrepareDownload = 6 => "prepareDownload",
        GetBpp = 7 => "getBpp",
        LoadBpp = 8 => "loadBpp",
        HandleNotification = 9 => "handleNotification",
        RemoveNotification = 10 => "removeNotification",
        CancelSession = 11 => "cancelSession",
        EimConfig = 12 => "eimConfig",
        Ipa = 13 => "ipa",
    }
}

tlv_struct! {
    /// Terminal result of a flow, as printed by the CLI.
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct FlowReport: 0x74 {
        0 req outcome: Outcome,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        1 opt reason: Option<CancelSessionReason>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        2 opt stage: Option<Stage>,
        /// Numeric code reported by the peer, if any.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        3 opt code: Option<u8>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        4 opt name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        5 opt transaction_id: Option<TransactionId>,
        6 req transcript_ref: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        7 opt detail: Option<String>,
    }
}

impl FlowReport {
    pub fn new(outcome: Outcome) -> Self {
        FlowReport {
            outcome,
            reason: None,
            stage: None,
            code: None,
            name: None,
            transaction_id: None,
            transcript_ref: String::new(),
            detail: None,
        }
    }

    pub fn cancelled(reason: CancelSessionReason) -> Self {
        FlowReport {
            reason: Some(reason),
            ..FlowReport::new(Outcome::Cancelled)
        }
    }

    /// An error at `stage` carrying a peer code and its wire name.
    pub fn error(stage: Stage, code: Option<u8>, name: impl Into<String>) -> Self {
        FlowReport {
            stage: Some(stage),
            code,
            name: Some(name.into()),
            ..FlowReport::new(Outcome::Error)
        }
    }

    pub fn with_transaction(mut self, id: Option<TransactionId>) -> Self {
        if self.transaction_id.is_none() {
            self.transaction_id = id;
        }
        self
    }

    /// Records the peer code that led to the outcome.
    pub fn with_peer_code(mut self, stage: Stage, code: u8, name: impl Into<String>) -> Self {
        self.stage = Some(stage);
        self.code = Some(code);
        self.name = Some(name.into());
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn is_installed(&self) -> bool {
        self.outcome == Outcome::Installed
    }
}
