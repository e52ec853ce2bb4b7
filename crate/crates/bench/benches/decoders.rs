use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use permbp::channel::make_batch;
use permbp::channel::{stream_rng, SnrKind};
use permbp::decoder::{decode, decode_hard, DecoderConfig, DecoderParams};
use permbp::reference::{bp_decode, mrrd_decode, osd_decode, ExhaustiveMl, MrrdConfig};
use permbp::train::batch_gradient;
use permbp_bench::{bch31_16, llr_frames};

fn decoders(c: &mut Criterion) {
    let (code, reservoir) = bch31_16();
    let frames = llr_frames(&code, 3.0, 64);
    let params = DecoderParams::constant(&code, 0.25);
    let mut g = c.benchmark_group("bch31_16_3dB");

    for early_stop in [false, true] {
        let config = DecoderConfig {
            early_stop_on_syndrome: early_stop,
            ..DecoderConfig::new(10, 2)
        };
        let name = if early_stop { "perm_10x2_early_stop" } else { "perm_10x2" };
        let mut res = reservoir.clone();
        let mut i = 0;
        g.bench_function(name, |b| {
            b.iter_batched(
                || {
                    i = (i + 1) % frames.len();
                    (res.sample_many(10), &frames[i])
                },
                |(perms, llr)| decode_hard(&params, &config, &code, &perms, llr).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }

    let config = DecoderConfig::new(10, 2);
    let perms = reservoir.clone().sample_many(10);
    g.bench_function("perm_10x2_full_trace", |b| {
        b.iter(|| decode(&params, &config, &code, &perms, black_box(&frames[0])).unwrap())
    });
    g.bench_function("bp_20", |b| b.iter(|| bp_decode(&code, black_box(&frames[0]), 20, 15.0).unwrap()));
    g.bench_function("osd_2", |b| b.iter(|| osd_decode(&code, black_box(&frames[0]), 2).unwrap()));
    let ml = ExhaustiveMl::new(&code).unwrap();
    g.bench_function("ml_exhaustive", |b| b.iter(|| ml.decode(black_box(&frames[0]))));
    let mrrd = MrrdConfig::new(5, 10, 2);
    g.bench_function("mrrd_5", |b| {
        let mut res = reservoir.clone();
        b.iter(|| mrrd_decode(&code, black_box(&frames[0]), &mrrd, None, &mut res).unwrap())
    });
    g.finish();
}

fn gradient(c: &mut Criterion) {
    let (code, reservoir) = bch31_16();
    let config = DecoderConfig::new(10, 2);
    let snr: Vec<f64> = (1..=8).map(f64::from).collect();
    let batch = make_batch(&code, SnrKind::EbN0, &snr, 20, &mut stream_rng(1, 0)).unwrap();
    let mut res = reservoir.clone();
    let perms: Vec<_> = (0..batch.len()).map(|_| res.sample_many(10)).collect();
    let params = DecoderParams::unit(&code);
    let mut g = c.benchmark_group("training");
    g.sample_size(10);
    g.bench_function("batch_gradient_160x10x2", |b| {
        b.iter(|| batch_gradient(&code, &params, &config, 100.0, &batch, &perms).unwrap())
    });
    g.finish();
}

criterion_group!(benches, decoders, gradient);
criterion_main!(benches);
