//! Mutual-authentication payloads and the ES10b AuthenticateServer exchange.

use crate::pki::{Certificate, Crl, PublicKeyId, Signature};

use super::{AuthenticateErrorCode, Challenge, OperationType, RspCapability, TransactionId};

tlv_struct! {
    pub struct EuiccInfo1: 0x20 {
        0 req euicc_ci_pkid_list_for_verification: Vec<PublicKeyId>,
        1 req euicc_ci_pkid_list_for_signing: Vec<PublicKeyId>,
        2 req euicc_rsp_capability: RspCapability,
    }
}

tlv_struct! {
    /// Carries the EuiccInfo1 lists verbatim plus platform details.
    pub struct EuiccInfo2: 0x21 {
        0 req euicc_ci_pkid_list_for_verification: Vec<PublicKeyId>,
        1 req euicc_ci_pkid_list_for_signing: Vec<PublicKeyId>,
        2 req euicc_rsp_capability: RspCapability,
        3 req svn: [u8; 3],
        4 req free_non_volatile_memory: u32,
        5 req installed_profile_count: u16,
    }
}

impl EuiccInfo2 {
    pub fn info1(&self) -> EuiccInfo1 {
        EuiccInfo1 {
            euicc_ci_pkid_list_for_verification: self.euicc_ci_pkid_list_for_verification.clone(),
            euicc_ci_pkid_list_for_signing: self.euicc_ci_pkid_list_for_signing.clone(),
            euicc_rsp_capability: self.euicc_rsp_capability,
        }
    }
}

tlv_struct! {
    pub struct ServerSigned1: 0x22 {
        0 req transaction_id: TransactionId,
        1 req euicc_challenge: Challenge,
        2 req server_address: String,
        3 req server_challenge: Challenge,
    }
}

tlv_struct! {
    pub struct DeviceInfo: 0x23 {
        /// Eight-digit type allocation code.
        0 req tac: String,
        1 req device_capabilities: RspCapability,
    }
}

tlv_struct! {
    pub struct CtxParams1: 0x24 {
        0 req matching_id: String,
        1 req device_info: DeviceInfo,
        2 req operation_type: OperationType,
    }
}

tlv_struct! {
    pub struct EuiccSigned1: 0x25 {
        0 req transaction_id: TransactionId,
        1 req server_address: String,
        2 req server_challenge: Challenge,
        3 req euicc_info2: EuiccInfo2,
        4 req ctx_params1: CtxParams1,
    }
}

tlv_struct! {
    pub struct GetEuiccChallengeResponse: 0x44 {
        0 req euicc_challenge: Challenge,
    }
}

tlv_struct! {
    /// ES10b.AuthenticateServer input. `crl_stapling_used` is the session
    /// context flag telling the eUICC to check the stapled CRLs.
    pub struct AuthenticateServerRequest: 0x40 {
        0 req server_signed1: ServerSigned1,
        1 req server_signature1: Signature,
        2 req euicc_ci_pkid_to_be_used: PublicKeyId,
        3 req server_certificate: Certificate,
        4 req ctx_params1: CtxParams1,
        5 req other_certs_in_chain: Vec<Certificate>,
        6 req crl_list: Vec<Crl>,
        7 flag crl_stapling_used: bool,
    }
}

tlv_struct! {
    pub struct AuthenticateResponseOk: 0x41 {
        0 req euicc_signed1: EuiccSigned1,
        1 req euicc_signature1: Signature,
        2 req euicc_certificate: Certificate,
        3 req next_cert_in_chain: Certificate,
        4 req other_certs_in_chain: Vec<Certificate>,
    }
}

tlv_struct! {
    pub struct AuthenticateResponseError: 0x42 {
        0 req transaction_id: TransactionId,
        1 req authenticate_error_code: AuthenticateErrorCode,
    }
}

tlv_choice! {
    pub enum AuthenticateServerResponse: 0x43 {
        0 Ok(AuthenticateResponseOk),
        1 Error(AuthenticateResponseError),
    }
}
