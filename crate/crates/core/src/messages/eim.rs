//! eIM configuration data and signed configuration operations.

use serde::{Deserialize, Serialize};

use crate::pki::Signature;

use super::json;
use super::{EimConfigStatus, EimOperationKind};

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct EimConfigurationData: 0x53 {
        0 req eim_id: String,
        #[serde(with = "json::content")]
        1 req eim_public_key: [u8; 32],
        2 req eim_address: String,
    }
}

tlv_struct! {
    /// The bytes an eIM signs. `counter` must strictly increase per eIM.
    pub struct EimOperation: 0x54 {
        0 req kind: EimOperationKind,
        1 req eim_id: String,
        2 req counter: u32,
        3 opt new_config: Option<EimConfigurationData>,
    }
}

tlv_struct! {
    pub struct SignedEimOperation: 0x55 {
        0 req operation: EimOperation,
        1 req signature: Signature,
    }
}

tlv_choice! {
    pub enum EimConfigRequest: 0x56 {
        /// Association through the IPA; only accepted when none exists.
        0 Add(EimConfigurationData),
        1 Signed(SignedEimOperation),
        2 Remove(()),
    }
}

tlv_struct! {
    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct EimConfigResult: 0x57 {
        0 req status: EimConfigStatus,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        1 opt eim_id: Option<String>,
    }
}
