use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};

use rsplab_core::messages::{Envelope, ProfileMetadata};
use rsplab_core::tlv::TlvCodec;
use rsplab_core::{FlowName, World};

fn bench_codec(c: &mut Criterion) {
    let metadata = rsplab_bench::metadata();
    let bytes = metadata.to_tlv();
    let mut group = c.benchmark_group("profile_metadata");
    group.throughput(Throughput::Bytes(bytes.len() as u64));
    group.bench_function("encode", |b| b.iter(|| black_box(&metadata).to_tlv()));
    group.bench_function("decode", |b| {
        b.iter(|| ProfileMetadata::from_tlv(black_box(&bytes)).unwrap())
    });
    group.finish();

    // The largest envelope of a compact download, captured from a run.
    let mut world = World::build(&rsplab_bench::scenario(FlowName::IotAssisted)).unwrap();
    world.run();
    let largest = world
        .transcript()
        .into_iter()
        .map(|e| e.envelope)
        .filter(|b| Envelope::decode(b).is_ok())
        .max_by_key(|b| b.len())
        .expect("the run exchanged messages");
    let mut group = c.benchmark_group("largest_envelope");
    group.throughput(Throughput::Bytes(largest.len() as u64));
    group.bench_function("decode", |b| b.iter(|| Envelope::decode(black_box(&largest)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_codec);
criterion_main!(benches);
