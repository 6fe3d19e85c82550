use serde::{Deserialize, Serialize};

use crate::messages::{BoundProfilePackage, Eid, Iccid, ProfileMetadata, TransactionId};

wire_enum! {
    pub enum OrderState {
        Released = 0 => "released",
        Downloaded = 1 => "downloaded",
        Installed = 2 => "installed",
        Error = 3 => "error",
    }
}

impl OrderState {
    /// The forward edges of the order lifecycle. A retry after a failed
    /// installation stays in `downloaded`.
    pub fn can_move_to(self, next: OrderState) -> bool {
        use OrderState::*;
        matches!(
            (self, next),
            (Released, Downloaded) | (Released, Error) | (Downloaded, Downloaded) | (Downloaded, Installed) | (Downloaded, Error)
        )
    }

    pub fn is_downloadable(self) -> bool {
        matches!(self, OrderState::Released | OrderState::Downloaded)
    }
}

/// A package already bound to one eUICC one-time key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundBpp {
    pub eid: Eid,
    pub euicc_otpk: [u8; 32],
    pub transaction_id: TransactionId,
    pub bpp: BoundProfilePackage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OrderSpec {
    pub matching_id: String,
    pub metadata: ProfileMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eid: Option<Eid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confirmation_code: Option<String>,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    /// Discovered through an SM-DS event rather than an activation code.
    #[serde(default)]
    pub smds_event: bool,
    /// Terminated before any download is attempted.
    #[serde(default)]
    pub expired: bool,
    /// Logical time from which the order can no longer be delivered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires_at: Option<u64>,
    /// Announce a remote management session to follow the download.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rpm_pending: bool,
}

fn default_max_attempts() -> u32 {
    3
}

impl OrderSpec {
    pub fn new(matching_id: impl Into<String>, metadata: ProfileMetadata) -> Self {
        OrderSpec {
            matching_id: matching_id.into(),
            metadata,
            eid: None,
            confirmation_code: None,
            max_attempts: default_max_attempts(),
            smds_event: false,
            expired: false,
            expires_at: None,
            rpm_pending: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileOrder {
    pub matching_id: String,
    pub iccid: Iccid,
    pub eid: Option<Eid>,
    pub state: OrderState,
    pub download_attempts: u32,
    pub max_attempts: u32,
    pub cc_required: bool,
    pub confirmation_code: Option<String>,
    pub cc_failures: u32,
    pub metadata: ProfileMetadata,
    pub bound_bpp: Option<BoundBpp>,
    pub expired: bool,
    pub expires_at: Option<u64>,
    pub smds_event: bool,
    pub rpm_pending: bool,
}

impl ProfileOrder {
    pub fn from_spec(spec: OrderSpec) -> Self {
        ProfileOrder {
            iccid: spec.metadata.iccid,
            matching_id: spec.matching_id,
            eid: spec.eid,
            state: OrderState::Released,
            download_attempts: 0,
            max_attempts: spec.max_attempts,
            cc_required: spec.confirmation_code.is_some(),
            confirmation_code: spec.confirmation_code,
            cc_failures: 0,
            metadata: spec.metadata,
            bound_bpp: None,
            expired: spec.expired,
            expires_at: spec.expires_at,
            smds_event: spec.smds_event,
            rpm_pending: spec.rpm_pending,
        }
    }

    pub fn is_expired_at(&self, now: u64) -> bool {
        self.expired || self.expires_at.is_some_and(|t| now >= t)
    }

    /// Moves along a lifecycle edge; refuses anything else.
    pub fn transition(&mut self, next: OrderState) -> bool {
        if self.state.can_move_to(next) {
            self.state = next;
            true
        } else {
            false
        }
    }

    /// Undoes this session's move to `downloaded` when the session is
    /// cancelled, so a cancelled order is never left downloaded.
    pub(crate) fn roll_back(&mut self, before: OrderState) {
        if self.state == OrderState::Downloaded && before == OrderState::Released {
            self.state = OrderState::Released;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_declared_edges_are_taken() {
        use OrderState::*;
        let all = [Released, Downloaded, Installed, Error];
        let allowed = [
            (Released, Downloaded),
            (Released, Error),
            (Downloaded, Downloaded),
            (Downloaded, Installed),
            (Downloaded, Error),
        ];
        for from in all {
            for to in all {
                assert_eq!(from.can_move_to(to), allowed.contains(&(from, to)), "{from} -> {to}");
            }
        }
    }
}
