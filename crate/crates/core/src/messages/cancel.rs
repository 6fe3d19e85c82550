use crate::pki::Signature;

use super::{CancelSessionErrorCode, CancelSessionReason, TransactionId};

tlv_struct! {
    pub struct CancelSessionRequest: 0x36 {
        0 req transaction_id: TransactionId,
        1 req reason: CancelSessionReason,
    }
}

tlv_struct! {
    pub struct EuiccCancelSessionSigned: 0x37 {
        0 req transaction_id: TransactionId,
        1 req smdp_oid: String,
        2 req reason: CancelSessionReason,
    }
}

tlv_struct! {
    pub struct CancelSessionResponseOk: 0x38 {
        0 req euicc_cancel_session_signed: EuiccCancelSessionSigned,
        1 req euicc_cancel_session_signature: Signature,
    }
}

tlv_choice! {
    pub enum CancelSessionResponse: 0x39 {
        0 Ok(CancelSessionResponseOk),
        1 Error(CancelSessionErrorCode),
    }
}
