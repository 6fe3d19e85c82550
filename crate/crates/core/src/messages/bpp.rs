//! Download payloads: the second signed pair, profile metadata, the bound
//! profile package and the installation result.

use crate::pki::Signature;

use super::{BppCommandId, ErrorReason, Iccid, Pprs, TransactionId};

tlv_struct! {
    pub struct SmdpSigned2: 0x26 {
        0 req transaction_id: TransactionId,
        1 req cc_required_flag: bool,
        /// One-time eUICC key already used to bind a stored package.
        2 opt bpp_euicc_otpk: Option<[u8; 32]>,
        3 flag rpm_pending: bool,
    }
}

tlv_struct! {
    pub struct EuiccSigned2: 0x27 {
        0 req transaction_id: TransactionId,
        1 req euicc_otpk: [u8; 32],
        2 opt hash_cc: Option<[u8; 32]>,
    }
}

tlv_struct! {
    #[derive(serde::Serialize, serde::Deserialize)]
    #[serde(rename_all = "camelCase", deny_unknown_fields)]
    pub struct ProfileMetadata: 0x28 {
        0 req iccid: Iccid,
        1 req profile_name: String,
        2 req service_provider_name: String,
        #[serde(default)]
        3 req pprs: Pprs,
        #[serde(default)]
        4 flag lpr_config_present: bool,
    }
}

tlv_struct! {
    /// ES8+.InitialiseSecureChannel. The signature covers
    /// [`IscSignedData`], which also binds the eUICC one-time key.
    pub struct InitialiseSecureChannel: 0x29 {
        0 req transaction_id: TransactionId,
        1 req smdp_otpk: [u8; 32],
        2 req smdp_signature: Signature,
    }
}

tlv_struct! {
    pub struct IscSignedData: 0x2A {
        0 req transaction_id: TransactionId,
        1 req smdp_otpk: [u8; 32],
        2 req euicc_otpk: [u8; 32],
    }
}

tlv_struct! {
    /// One MAC-protected ES8+ command. Payloads never exceed
    /// [`MAX_SEGMENT_PAYLOAD`] bytes.
    pub struct SealedSegment: 0x2B {
        0 req command_id: BppCommandId,
        1 req index: u16,
        2 req payload: Vec<u8>,
        3 req mac: [u8; 16],
    }
}

pub const MAX_SEGMENT_PAYLOAD: usize = 1024;

tlv_struct! {
    /// Bytes under a segment MAC.
    pub struct SegmentMacData: 0x2C {
        0 req transaction_id: TransactionId,
        1 req command_id: BppCommandId,
        2 req index: u16,
        3 req payload: Vec<u8>,
    }
}

tlv_struct! {
    pub struct BoundProfilePackage: 0x2D {
        0 req initialise_secure_channel: InitialiseSecureChannel,
        1 req configure_isdp: SealedSegment,
        2 req store_metadata: SealedSegment,
        3 req load_profile_elements: Vec<SealedSegment>,
    }
}

impl BoundProfilePackage {
    /// The ES10b load sequence, in order.
    pub fn commands(&self) -> Vec<super::BppCommand> {
        use super::BppCommand;
        let mut out = vec![
            BppCommand::InitialiseSecureChannel(self.initialise_secure_channel.clone()),
            BppCommand::Sealed(self.configure_isdp.clone()),
            BppCommand::Sealed(self.store_metadata.clone()),
        ];
        out.extend(self.load_profile_elements.iter().cloned().map(BppCommand::Sealed));
        out
    }
}

tlv_struct! {
    /// Payload of the ConfigureISDP segment.
    pub struct IsdpConfig: 0x2E {
        0 req iccid: Iccid,
        1 req element_segments: u16,
    }
}

tlv_struct! {
    pub struct NotificationMetadata: 0x31 {
        0 req seq_number: u32,
        1 opt iccid: Option<Iccid>,
    }
}

tlv_struct! {
    pub struct SuccessResult: 0x32 {
        0 req aid: Vec<u8>,
        1 req ppi_response: Vec<u8>,
    }
}

tlv_struct! {
    pub struct ErrorResult: 0x33 {
        0 req bpp_command_id: BppCommandId,
        1 req error_reason: ErrorReason,
        2 opt ppi_response: Option<Vec<u8>>,
    }
}

tlv_choice! {
    pub enum FinalResult: 0x35 {
        0 Success(SuccessResult),
        1 Error(ErrorResult),
    }
}

tlv_struct! {
    pub struct ProfileInstallationResultData: 0x30 {
        0 req transaction_id: TransactionId,
        1 req notification_metadata: NotificationMetadata,
        2 req smdp_oid: String,
        3 req final_result: FinalResult,
    }
}

tlv_struct! {
    pub struct ProfileInstallationResult: 0x34 {
        0 req profile_installation_result_data: ProfileInstallationResultData,
        1 req euicc_sign_pir: Signature,
    }
}

impl ProfileInstallationResult {
    pub fn is_success(&self) -> bool {
        matches!(self.profile_installation_result_data.final_result, FinalResult::Success(_))
    }

    pub fn seq_number(&self) -> u32 {
        self.profile_installation_result_data.notification_metadata.seq_number
    }

    pub fn transaction_id(&self) -> TransactionId {
        self.profile_installation_result_data.transaction_id
    }
}
