use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fqe_core::dct::{fdct_block, idct_block};
use fqe_core::estimator::estimate;
use fqe_core::eval::double_compress_file;
use fqe_core::refdata::{build_reference, Kind};
use fqe_core::stats::{build_histogram, chi2};
use fqe_core::{constant_table, standard_table, synth, EstimationParams, GrayImage};

fn transforms(c: &mut Criterion) {
    let block: [u8; 64] = std::array::from_fn(|i| (i * 37 % 251) as u8);
    c.bench_function("fdct_block", |b| b.iter(|| fdct_block(black_box(&block))));
    let coeffs = fdct_block(&block);
    c.bench_function("idct_block", |b| b.iter(|| idct_block(black_box(&coeffs))));
}

fn histograms(c: &mut Criterion) {
    let a: Vec<i32> = (0..4096).map(|i| (i * 7919 % 61) - 30).collect();
    let b: Vec<i32> = (0..4096).map(|i| (i * 104_729 % 45) - 22).collect();
    let (ha, hb) = (build_histogram(&a).unwrap(), build_histogram(&b).unwrap());
    c.bench_function("build_histogram_4096", |bn| {
        bn.iter(|| build_histogram(black_box(&a)))
    });
    c.bench_function("chi2", |bn| {
        bn.iter(|| chi2(black_box(&ha), black_box(&hb)))
    });
}

fn dataset_and_estimate(c: &mut Criterion) {
    let patches: Vec<GrayImage> = (0..40u64).map(|s| synth::patch(s, 64)).collect();
    let ds = build_reference(&patches, 8, 15).unwrap();
    c.bench_function("query_n1000", |b| {
        b.iter(|| {
            ds.query(4, 2, Kind::Ac, black_box(3.5), 1000)
                .unwrap()
                .len()
        })
    });

    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("build_reference_8_patches_q1max8", |b| {
        b.iter(|| build_reference(black_box(&patches[..8]), 8, 15).unwrap())
    });
    let img = synth::patch(9_000, 64);
    let jpeg = double_compress_file(
        &img,
        &constant_table(5).unwrap(),
        &standard_table(95).unwrap(),
        "bench",
    )
    .unwrap();
    let p = EstimationParams {
        q1_max: 8,
        ..Default::default()
    };
    g.bench_function("estimate_64px", |b| {
        b.iter(|| estimate(black_box(&jpeg), &ds, &p).unwrap())
    });
    g.finish();
}

criterion_group!(benches, transforms, histograms, dataset_and_estimate);
criterion_main!(benches);
