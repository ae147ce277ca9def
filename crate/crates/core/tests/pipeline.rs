use fqe_core::estimator::{estimate, Estimate, EstimationParams, RowStatus};
use fqe_core::eval::{
    double_compress_file, evaluate, make_corpus, CorpusSpec, CropMode, FirstCompression,
};
use fqe_core::refdata::{build_reference, deserialize, serialize};
use fqe_core::{constant_table, synth, GrayImage};

fn small_dataset() -> fqe_core::ReferenceDataset {
    let patches: Vec<GrayImage> = (0..30u64).map(|s| synth::patch(500 + s, 64)).collect();
    build_reference(&patches, 8, 15).unwrap()
}

#[test]
fn self_retrieval_with_constant_tables() {
    let patches: Vec<GrayImage> = (0..12u64).map(|s| synth::patch(700 + s, 64)).collect();
    let ds = build_reference(&patches, 6, 15).unwrap();
    let p = EstimationParams {
        q1_max: 6,
        ..Default::default()
    };
    let (t1, t2) = (constant_table(3).unwrap(), constant_table(4).unwrap());
    for img in &patches {
        let r = estimate(&double_compress_file(img, &t1, &t2, "p").unwrap(), &ds, &p).unwrap();
        for (row, e) in r.distances.rows.iter().zip(&r.raw) {
            if row.status == RowStatus::Ok {
                assert_eq!(row.distances[2], 0.0);
                assert_eq!(*e, Estimate::Value(3));
            }
        }
    }
}

#[test]
fn estimation_is_independent_of_thread_count() {
    let ds = small_dataset();
    let p = EstimationParams {
        q1_max: 8,
        ..Default::default()
    };
    let img = synth::patch(9999, 64);
    let bytes = double_compress_file(
        &img,
        &constant_table(5).unwrap(),
        &constant_table(2).unwrap(),
        "p",
    )
    .unwrap();
    let base = estimate(&bytes, &ds, &p).unwrap();
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        assert_eq!(pool.install(|| estimate(&bytes, &ds, &p)).unwrap(), base);
        let patches: Vec<GrayImage> = (0..30u64).map(|s| synth::patch(500 + s, 64)).collect();
        let rebuilt = pool.install(|| build_reference(&patches, 8, 15)).unwrap();
        assert_eq!(serialize(&rebuilt).unwrap(), serialize(&ds).unwrap());
    }
}

#[test]
fn loaded_dataset_gives_identical_estimates() {
    let ds = small_dataset();
    let loaded = deserialize(&serialize(&ds).unwrap()).unwrap();
    let p = EstimationParams {
        q1_max: 8,
        ..Default::default()
    };
    let img = synth::patch(4242, 64);
    let bytes = double_compress_file(
        &img,
        &constant_table(6).unwrap(),
        &constant_table(3).unwrap(),
        "p",
    )
    .unwrap();
    assert_eq!(
        estimate(&bytes, &ds, &p).unwrap(),
        estimate(&bytes, &loaded, &p).unwrap()
    );
}

#[test]
fn batch_rows_equal_single_image_estimates() {
    let ds = small_dataset();
    let p = EstimationParams {
        q1_max: 8,
        ..Default::default()
    };
    let sources: Vec<(String, GrayImage)> = (0..6u64)
        .map(|s| (format!("s{s}"), synth::image(s + 50, 80, 80)))
        .collect();
    let spec = CorpusSpec {
        first: vec![FirstCompression::Quality(85), FirstCompression::Quality(95)],
        qf2: 95,
        patch: 64,
        crop: CropMode::Random { seed: 1 },
    };
    let items: Vec<_> = make_corpus(&sources, &spec)
        .unwrap()
        .into_iter()
        .map(|i| (i.row, i.jpeg))
        .collect();
    let report = evaluate(&items, &ds, &p).unwrap();
    assert_eq!(report.cells.len(), 2);
    for ((_, bytes), row) in items.iter().zip(&report.images) {
        let single = estimate(bytes, &ds, &p).unwrap();
        assert_eq!(single.estimates, row.estimates);
        assert_eq!(single.raw, row.raw);
    }
    for c in &report.cells {
        for s in &c.positions {
            assert_eq!(s.total, 6);
            assert!(s.raw_correct <= s.predictable() && s.reg_correct <= s.predictable());
        }
    }
}

#[test]
fn all_flat_corpus_is_fully_excluded() {
    let ds = small_dataset();
    let p = EstimationParams {
        q1_max: 8,
        ..Default::default()
    };
    let sources: Vec<(String, GrayImage)> = (0..3u8)
        .map(|v| {
            (
                format!("f{v}"),
                GrayImage::filled(64, 64, 40 + v * 50).unwrap(),
            )
        })
        .collect();
    let spec = CorpusSpec {
        first: vec![FirstCompression::Quality(70)],
        qf2: 90,
        patch: 64,
        crop: CropMode::Center,
    };
    let items: Vec<_> = make_corpus(&sources, &spec)
        .unwrap()
        .into_iter()
        .map(|i| (i.row, i.jpeg))
        .collect();
    let report = evaluate(&items, &ds, &p).unwrap();
    let cell = &report.cells[0];
    assert_eq!(cell.reg_accuracy, None);
    assert!(cell
        .positions
        .iter()
        .all(|s| s.excluded_fraction == 1.0 && s.degenerate == 3));
    assert_eq!(report.reg_mean, None);
}
