//! Local policy checks on profile metadata before any download.

use crate::messages::{CancelSessionReason, Pprs, ProfileInfo, ProfileMetadata, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RulePolicy {
    /// When off, PPRs are passed through and left to the eUICC.
    pub enforce_profile_rules: bool,
    pub lpr_supported: bool,
    /// Both the LPA and the eUICC support cancelling for empty names.
    pub empty_name_cancel: bool,
}

/// Returns the cancel reason for the first rule the profile breaks. `rat`
/// and `installed` are only consulted when the metadata carries PPRs.
pub fn check_profile_rules(
    metadata: &ProfileMetadata,
    rat: Option<&Rat>,
    installed: &[ProfileInfo],
    policy: &RulePolicy,
) -> Result<(), CancelSessionReason> {
    if policy.enforce_profile_rules && !metadata.pprs.is_empty() {
        if !rat.is_some_and(|r| r.permits(metadata.pprs)) {
            return Err(CancelSessionReason::PprNotAllowed);
        }
        if metadata.pprs.contains(Pprs::PPR1) && !installed.is_empty() {
            return Err(CancelSessionReason::PprNotAllowed);
        }
    }
    if metadata.lpr_config_present && !policy.lpr_supported {
        return Err(CancelSessionReason::LprNotSupported);
    }
    if metadata.profile_name.is_empty() || metadata.service_provider_name.is_empty() {
        return Err(if policy.empty_name_cancel {
            CancelSessionReason::EmptyProfileOrSpName
        } else {
            CancelSessionReason::UndefinedReason
        });
    }
    Ok(())
}
