//! ES10b requests and responses between the LPA (or IPA) and the eUICC that
//! are not part of the signed payload families.

use crate::pki::{Certificate, Signature};

use super::{
    DownloadErrorCode, EuiccSigned2, Iccid, InitialiseSecureChannel, Pprs, ProfileInstallationResult,
    RemoveNotificationStatus, SealedSegment, SmdpSigned2, TransactionId,
};

/// A request or acknowledgement without content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

impl crate::tlv::TlvCodec for Empty {
    const TAG: u8 = 0x3F;

    fn write_fields(&self, _: &mut crate::tlv::TlvWriter) {}

    fn read_fields(_: &mut crate::tlv::Fields<'_>) -> crate::tlv::Result<Self> {
        Ok(Empty {})
    }
}

tlv_struct! {
    pub struct PrepareDownloadRequest: 0x45 {
        0 req smdp_signed2: SmdpSigned2,
        1 req smdp_signature2: Signature,
        2 opt hash_cc: Option<[u8; 32]>,
        3 req smdp_certificate: Certificate,
    }
}

tlv_struct! {
    pub struct PrepareDownloadResponseOk: 0x46 {
        0 req euicc_signed2: EuiccSigned2,
        1 req euicc_signature2: Signature,
    }
}

tlv_struct! {
    pub struct PrepareDownloadResponseError: 0x47 {
        0 req transaction_id: TransactionId,
        1 req download_error_code: DownloadErrorCode,
    }
}

tlv_choice! {
    pub enum PrepareDownloadResponse: 0x48 {
        0 Ok(PrepareDownloadResponseOk),
        1 Error(PrepareDownloadResponseError),
    }
}

tlv_choice! {
    /// One ES10b.LoadBoundProfilePackage call.
    pub enum BppCommand: 0x49 {
        0 InitialiseSecureChannel(InitialiseSecureChannel),
        1 Sealed(SealedSegment),
    }
}

tlv_choice! {
    pub enum LoadBppResponse: 0x4A {
        /// Interim acknowledgement; more segments are expected.
        0 Ack(()),
        1 Result(ProfileInstallationResult),
    }
}

tlv_struct! {
    /// One RAT entry: the PPR combination it authorises.
    pub struct RatRule: 0x4C {
        0 req allowed_pprs: Pprs,
    }
}

tlv_struct! {
    pub struct Rat: 0x4B {
        0 req rules: Vec<RatRule>,
    }
}

impl Rat {
    /// Every requested PPR must be covered by some rule.
    pub fn permits(&self, pprs: Pprs) -> bool {
        pprs.is_empty() || self.rules.iter().any(|r| r.allowed_pprs.contains(pprs))
    }
}

tlv_struct! {
    pub struct ProfileInfo: 0x4D {
        0 req iccid: Iccid,
        1 req profile_name: String,
        2 req enabled: bool,
    }
}

tlv_struct! {
    pub struct ProfileInfoList: 0x4E {
        0 req profiles: Vec<ProfileInfo>,
    }
}

tlv_struct! {
    pub struct RemoveNotificationRequest: 0x4F {
        0 req seq_number: u32,
    }
}

tlv_struct! {
    pub struct RemoveNotificationResponse: 0x50 {
        0 req status: RemoveNotificationStatus,
    }
}

/// ES10b (and one ES10c) endpoint paths on the eUICC.
pub mod es10_endpoint {
    pub const GET_EUICC_INFO1: &str = "/es10b/getEuiccInfo1";
    pub const GET_EUICC_CHALLENGE: &str = "/es10b/getEuiccChallenge";
    pub const AUTHENTICATE_SERVER: &str = "/es10b/authenticateServer";
    pub const PREPARE_DOWNLOAD: &str = "/es10b/prepareDownload";
    pub const LOAD_BPP: &str = "/es10b/loadBoundProfilePackage";
    pub const CANCEL_SESSION: &str = "/es10b/cancelSession";
    pub const REMOVE_NOTIFICATION: &str = "/es10b/removeNotificationFromList";
    pub const GET_RAT: &str = "/es10b/getRat";
    pub const EIM_CONFIGURATION: &str = "/es10b/eimConfiguration";
    pub const GET_PROFILES_INFO: &str = "/es10c/getProfilesInfo";
}
