//! Inputs shared by the benchmarks.

use rsplab_core::harness::scenario::default_metadata;
use rsplab_core::messages::ProfileMetadata;
use rsplab_core::pki::{CrlDirectory, TrustStore};
use rsplab_core::{Clock, FlowName, PkiFixture, ScenarioSpec};

pub const SEED: u64 = 42;

/// A one-device scenario with a single order, ready for `World::build`.
pub fn scenario(flow: FlowName) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new("bench", flow);
    spec.seed = SEED;
    spec
}

pub fn metadata() -> ProfileMetadata {
    default_metadata()
}

/// A store trusting the fixture root, with every fixture CRL published.
pub fn store(fixture: &PkiFixture) -> TrustStore {
    let crls = CrlDirectory::default();
    for crl in &fixture.crls {
        crls.publish(crl.clone());
    }
    let mut store = TrustStore::with_crls(Clock::at(PkiFixture::EPOCH + 86_400), crls);
    store.add_root(fixture.ci.cert.clone()).expect("fixture root is self-signed");
    store
}
