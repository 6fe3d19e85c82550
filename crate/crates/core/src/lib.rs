#[macro_use]
mod macros;

pub mod clock;
pub mod crypto;
pub mod eim;
pub mod euicc;
pub mod harness;
pub mod lpa;
pub mod messages;
pub mod pki;
pub mod smdp;
pub mod tlv;

pub use clock::Clock;
pub use harness::scenario::{FlowName, RunSummary, ScenarioError, ScenarioSpec, World};
pub use harness::{FaultAction, FaultRule, TranscriptEntry, Transport, Verdict};
pub use messages::{ActivationCode, CancelSessionReason, FlowReport, Outcome, Stage, WireFormat};
pub use pki::{Certificate, KeyPair, PkiFixture, PublicKeyId};
