use criterion::{black_box, criterion_group, criterion_main, Criterion};

use rsplab_core::pki::validate_chain;
use rsplab_core::PkiFixture;

fn bench_chain(c: &mut Criterion) {
    let fixture = PkiFixture::generate(rsplab_bench::SEED);
    let store = rsplab_bench::store(&fixture);
    let eum = [fixture.eum.cert.clone()];

    c.bench_function("validate_euicc_chain", |b| {
        b.iter(|| assert!(validate_chain(black_box(&fixture.euicc.cert), &eum, &store).is_valid()))
    });
    c.bench_function("validate_dpauth", |b| {
        b.iter(|| assert!(validate_chain(black_box(&fixture.dpauth.cert), &[], &store).is_valid()))
    });
    c.bench_function("fixture_generate", |b| b.iter(|| PkiFixture::generate(black_box(7))));
}

criterion_group!(benches, bench_chain);
criterion_main!(benches);
