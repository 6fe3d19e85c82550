//! ES10b.LoadBoundProfilePackage: one command per call, in the fixed order
//! InitialiseSecureChannel, ConfigureISDP, StoreMetadata, then the profile
//! element segments. Every outcome other than an interim ack produces a
//! signed installation result and ends the session.

use crate::crypto::{isdp_aid, session_key, verify_segment};
use crate::messages::*;
use crate::pki::verify;
use crate::tlv::TlvCodec;

use super::{BppCursor, Euicc, InstalledProfile, PendingInstall, ProfileState};

type Failure = (BppCommandId, ErrorReason);

impl Euicc {
    pub fn load_bpp(&mut self, command: &BppCommand) -> LoadBppResponse {
        match self.step_bpp(command) {
            Ok(false) => LoadBppResponse::Ack(()),
            Ok(true) => LoadBppResponse::Result(self.finish_install()),
            Err((command_id, reason)) => LoadBppResponse::Result(self.fail_install(command_id, reason)),
        }
    }

    /// Returns whether the package is complete.
    fn step_bpp(&mut self, command: &BppCommand) -> Result<bool, Failure> {
        use ErrorReason as R;
        let id = match command {
            BppCommand::InitialiseSecureChannel(_) => BppCommandId::InitialiseSecureChannel,
            BppCommand::Sealed(seg) => seg.command_id,
        };
        let out_of_order = Err((id, R::BspStructureError));
        let Some(session) = self.session.as_ref() else {
            return out_of_order;
        };
        let (Some(ot), Some(pb_cert)) = (session.ot.clone(), session.pb_cert.clone()) else {
            return out_of_order;
        };
        let binding = ot.binding;

        match (session.cursor, command) {
            (BppCursor::AwaitingInit, BppCommand::InitialiseSecureChannel(isc)) => {
                let signed = IscSignedData {
                    transaction_id: isc.transaction_id,
                    smdp_otpk: isc.smdp_otpk,
                    euicc_otpk: *ot.key.public(),
                };
                if !verify(&pb_cert.subject_public_key, &signed.to_tlv(), &isc.smdp_signature) {
                    return Err((id, R::InvalidSignature));
                }
                if isc.transaction_id != binding {
                    return Err((id, R::InvalidTransactionId));
                }
                let shared = ot.key.agree(&isc.smdp_otpk).ok_or((id, R::UnsupportedCrtValues))?;
                let session = self.session.as_mut().expect("checked");
                session.session_key = Some(session_key(&shared, &binding));
                session.cursor = BppCursor::AwaitingIsdp;
                Ok(false)
            }
            (BppCursor::AwaitingIsdp, BppCommand::Sealed(seg))
                if seg.command_id == BppCommandId::ConfigureIsdp && seg.index == 0 =>
            {
                self.open_segment(seg)?;
                let config = IsdpConfig::from_tlv(&seg.payload).map_err(|_| (id, R::IncorrectInputValues))?;
                if self.profiles.iter().any(|p| p.iccid == config.iccid) {
                    return Err((id, R::InstallFailedDueToIccidAlreadyExistsOnEuicc));
                }
                let session = self.session.as_mut().expect("checked");
                session.pending = Some(PendingInstall {
                    iccid: config.iccid,
                    element_segments: config.element_segments,
                    metadata: None,
                    elements: Vec::new(),
                });
                session.cursor = BppCursor::AwaitingMetadata;
                Ok(false)
            }
            (BppCursor::AwaitingMetadata, BppCommand::Sealed(seg))
                if seg.command_id == BppCommandId::StoreMetadata && seg.index == 0 =>
            {
                self.open_segment(seg)?;
                let metadata =
                    ProfileMetadata::from_tlv(&seg.payload).map_err(|_| (id, R::IncorrectInputValues))?;
                let rat = self.rat.clone();
                let session = self.session.as_mut().expect("checked");
                let pending = session.pending.as_mut().expect("set by ConfigureISDP");
                if metadata.iccid != pending.iccid {
                    return Err((id, R::InstallFailedDueToDataMismatch));
                }
                if !rat.permits(metadata.pprs) {
                    return Err((id, R::PprNotAllowed));
                }
                let done = pending.element_segments == 0;
                pending.metadata = Some(metadata);
                session.cursor = BppCursor::AwaitingElements;
                Ok(done)
            }
            (BppCursor::AwaitingElements, BppCommand::Sealed(seg))
                if seg.command_id == BppCommandId::LoadProfileElements =>
            {
                let free = self.free_nvm as usize;
                let pending = session.pending.as_ref().expect("set by ConfigureISDP");
                let expected = (pending.elements.len() / MAX_SEGMENT_PAYLOAD) as u16;
                if seg.index != expected || seg.index >= pending.element_segments {
                    return out_of_order;
                }
                self.open_segment(seg)?;
                let pending = self
                    .session
                    .as_mut()
                    .and_then(|s| s.pending.as_mut())
                    .expect("checked");
                pending.elements.extend_from_slice(&seg.payload);
                if pending.elements.len() > free {
                    return Err((id, R::InstallFailedDueToInsufficientMemoryForProfile));
                }
                let last = seg.index + 1 == pending.element_segments;
                // Only the final segment may be short.
                if !last && seg.payload.len() != MAX_SEGMENT_PAYLOAD {
                    return Err((id, R::BspStructureError));
                }
                Ok(last)
            }
            _ => out_of_order,
        }
    }

    fn open_segment(&self, seg: &SealedSegment) -> Result<(), Failure> {
        let session = self.session.as_ref().expect("checked by caller");
        let key = session.session_key.as_ref().expect("set by InitialiseSecureChannel");
        let binding = session.ot.as_ref().expect("checked by caller").binding;
        if verify_segment(key, binding, seg) {
            Ok(())
        } else {
            Err((seg.command_id, ErrorReason::BspSecurityError))
        }
    }

    fn finish_install(&mut self) -> ProfileInstallationResult {
        let session = self.session.as_mut().expect("install needs a session");
        session.cursor = BppCursor::Done;
        let pending = session.pending.take().expect("install needs a pending profile");
        let metadata = pending.metadata.expect("metadata stored before elements");
        let binding = session.ot.as_ref().expect("checked").binding;
        let aid = isdp_aid(&pending.iccid);
        self.free_nvm = self.free_nvm.saturating_sub(pending.elements.len() as u32);
        self.ot_keys.retain(|k| k.binding != binding);
        self.profiles.push(InstalledProfile {
            iccid: pending.iccid,
            metadata,
            isdp_aid: aid.clone(),
            state: ProfileState::Disabled,
        });
        self.record_result(
            Some(pending.iccid),
            FinalResult::Success(SuccessResult {
                aid,
                ppi_response: Vec::new(),
            }),
        )
    }

    fn fail_install(&mut self, command_id: BppCommandId, reason: ErrorReason) -> ProfileInstallationResult {
        let iccid = self
            .session
            .as_ref()
            .and_then(|s| s.pending.as_ref())
            .map(|p| p.iccid);
        self.record_result(
            iccid,
            FinalResult::Error(ErrorResult {
                bpp_command_id: command_id,
                error_reason: reason,
                ppi_response: None,
            }),
        )
    }

    /// Signs the result, queues it as a notification and ends the session.
    fn record_result(&mut self, iccid: Option<Iccid>, final_result: FinalResult) -> ProfileInstallationResult {
        let session = self.session.take();
        let transaction_id = session
            .as_ref()
            .and_then(|s| s.ot.as_ref().map(|o| o.binding).or(s.transaction_id))
            .unwrap_or(TransactionId([0; 16]));
        let smdp_oid = session
            .and_then(|s| s.server_cert)
            .and_then(|c| c.oid)
            .unwrap_or_default();
        let seq_number = self.next_seq;
        self.next_seq += 1;
        let data = ProfileInstallationResultData {
            transaction_id,
            notification_metadata: NotificationMetadata { seq_number, iccid },
            smdp_oid,
            final_result,
        };
        let euicc_sign_pir = self.sign(&data.to_tlv());
        let pir = ProfileInstallationResult {
            profile_installation_result_data: data,
            euicc_sign_pir,
        };
        self.notifications.push(pir.clone());
        pir
    }
}
