//! Evaluation corpora and accuracy reports.
//!
//! A corpus is a set of double-compressed JPEG files plus a manifest holding
//! the true first-compression factors of every file. Corpora are produced by
//! real encoding and decoding, so evaluation goes through the same parser as
//! single-image estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::estimator::{estimate, Estimate, EstimateError, EstimationParams};
use crate::image::{GrayImage, ImageError};
use crate::jpeg::{encode_baseline_gray, parse_jpeg, EncodeError, JpegError};
use crate::quant::{standard_table, QuantTable, TableError};
use crate::refdata::ReferenceDataset;

/// Number of zig-zag positions recorded as ground truth.
pub const TRUTH_LEN: usize = 15;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("source image {name}: {source}")]
    Image { name: String, source: ImageError },
    #[error("encoding {name}: {source}")]
    Encode { name: String, source: EncodeError },
    #[error("decoding {name}: {source}")]
    Jpeg { name: String, source: JpegError },
    #[error("estimating {name}: {source}")]
    Estimate { name: String, source: EstimateError },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("table file line {line}: {reason}")]
    TableFile { line: usize, reason: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid corpus spec: {0}")]
    Spec(String),
}

/// How the first compression of a corpus cell is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum FirstCompression {
    /// Standard scaled luminance table.
    Quality(u32),
    /// Explicit table; `label` names the corpus cell.
    Table { label: String, table: QuantTable },
}

impl FirstCompression {
    pub fn label(&self) -> String {
        match self {
            FirstCompression::Quality(qf) => format!("qf{qf}"),
            FirstCompression::Table { label, .. } => label.clone(),
        }
    }

    pub fn table(&self) -> Result<QuantTable, TableError> {
        match self {
            FirstCompression::Quality(qf) => standard_table(*qf),
            FirstCompression::Table { table, .. } => Ok(*table),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropMode {
    Center,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub first: Vec<FirstCompression>,
    pub qf2: u32,
    pub patch: usize,
    pub crop: CropMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub file: String,
    pub group: String,
    pub source: String,
    pub qf2: u32,
    pub seed: Option<u64>,
    pub crop_x: usize,
    pub crop_y: usize,
    pub truth: [u8; TRUTH_LEN],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub row: ManifestRow,
    pub jpeg: Vec<u8>,
}

/// Reads explicit tables: each table is 8 lines of 8 integers in natural
/// (row-major) order; tables are separated by blank lines. `#` starts a comment.
pub fn parse_table_file(text: &str) -> Result<Vec<QuantTable>, EvalError> {
    let mut tables = Vec::new();
    let mut current: Vec<u32> = Vec::new();
    let mut start = 0;
    let mut finish = |current: &mut Vec<u32>, line: usize| -> Result<(), EvalError> {
        if current.is_empty() {
            return Ok(());
        }
        if current.len() != 64 {
            return Err(EvalError::TableFile {
                line,
                reason: format!("table has {} values, expected 64", current.len()),
            });
        }
        tables.push(QuantTable::from_natural(current)?);
        current.clear();
        Ok(())
    };
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            finish(&mut current, start + 1)?;
            continue;
        }
        if current.is_empty() {
            start = n;
        }
        let values: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if values.len() != 8 {
            return Err(EvalError::TableFile {
                line: n + 1,
                reason: format!("expected 8 integers, found {}", values.len()),
            });
        }
        for v in values {
            let parsed = v.parse::<u32>().map_err(|_| EvalError::TableFile {
                line: n + 1,
                reason: format!("{v:?} is not a non-negative integer"),
            })?;
            current.push(parsed);
        }
    }
    finish(&mut current, start + 1)?;
    if tables.is_empty() {
        return Err(EvalError::TableFile {
            line: 0,
            reason: "no tables found".into(),
        });
    }
    Ok(tables)
}

fn crop_origin(img: &GrayImage, side: usize, mode: CropMode, index: usize) -> (usize, usize) {
    match mode {
        CropMode::Center => ((img.width() - side) / 2, (img.height() - side) / 2),
        CropMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            (
                rng.gen_range(0..=img.width() - side),
                rng.gen_range(0..=img.height() - side),
            )
        }
    }
}

/// Compresses `img` with `t1`, decodes it, and compresses the result with `t2`.
pub fn double_compress_file(
    img: &GrayImage,
    t1: &QuantTable,
    t2: &QuantTable,
    name: &str,
) -> Result<Vec<u8>, EvalError> {
    let enc = |img: &GrayImage, t: &QuantTable| {
        encode_baseline_gray(img, t).map_err(|source| EvalError::Encode {
            name: name.to_string(),
            source,
        })
    };
    let first = enc(img, t1)?;
    let decoded = parse_jpeg(&first)
        .map_err(|source| EvalError::Jpeg {
            name: name.to_string(),
            source,
        })?
        .luminance_pixels();
    enc(&decoded, t2)
}

/// Builds one double-compressed file per source image and first-compression cell.
///
/// Items are ordered cell by cell, sources in input order within a cell.
pub fn make_corpus(
    sources: &[(String, GrayImage)],
    spec: &CorpusSpec,
) -> Result<Vec<CorpusItem>, EvalError> {
    if sources.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if spec.first.is_empty() {
        return Err(EvalError::Spec("no first-compression cells".into()));
    }
    if spec.patch == 0 || spec.patch % 8 != 0 {
        return Err(EvalError::Spec(format!(
            "patch side {} must be a positive multiple of 8",
            spec.patch
        )));
    }
    let t2 = standard_table(spec.qf2)?;
    let mut labels: Vec<String> = spec.first.iter().map(|f| f.label()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != spec.first.len() {
        return Err(EvalError::Spec("duplicate first-compression cell".into()));
    }
    let mut crops = Vec::with_capacity(sources.len());
    for (index, (name, img)) in sources.iter().enumerate() {
        if img.width() < spec.patch || img.height() < spec.patch {
            return Err(EvalError::Image {
                name: name.clone(),
                source: ImageError::CropOutOfBounds {
                    x: 0,
                    y: 0,
                    side: spec.patch,
                    width: img.width(),
                    height: img.height(),
                },
            });
        }
        let (x, y) = crop_origin(img, spec.patch, spec.crop, index);
        let patch = img
            .crop(x, y, spec.patch)
            .map_err(|source| EvalError::Image {
                name: name.clone(),
                source,
            })?;
        crops.push((x, y, patch));
    }
    let seed = match spec.crop {
        CropMode::Center => None,
        CropMode::Random { seed } => Some(seed),
    };
    let mut items = Vec::with_capacity(sources.len() * spec.first.len());
    for first in &spec.first {
        let t1 = first.table()?;
        let group = first.label();
        let mut truth = [0u8; TRUTH_LEN];
        truth.copy_from_slice(&t1.first_zigzag(TRUTH_LEN));
        let cell: Result<Vec<CorpusItem>, EvalError> = sources
            .par_iter()
            .zip(crops.par_iter())
            .enumerate()
            .map(|(i, ((name, _), (x, y, patch)))| {
                let file = format!("{group}_{i:05}.jpg");
                let jpeg = double_compress_file(patch, &t1, &t2, &file)?;
                Ok(CorpusItem {
                    row: ManifestRow {
                        file,
                        group: group.clone(),
                        source: name.clone(),
                        qf2: spec.qf2,
                        seed,
                        crop_x: *x,
                        crop_y: *y,
                        truth,
                    },
                    jpeg,
                })
            })
            .collect();
        items.extend(cell?);
    }
    Ok(items)
}

fn manifest_header() -> Vec<String> {
    let mut h: Vec<String> = ["file", "group", "source", "qf2", "seed", "crop_x", "crop_y"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=TRUTH_LEN).map(|i| format!("q1_{i}")));
    h
}

pub fn write_manifest<W: std::io::Write>(rows: &[ManifestRow], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(manifest_header())?;
    for r in rows {
        let mut rec = vec![
            r.file.clone(),
            r.group.clone(),
            r.source.clone(),
            r.qf2.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.crop_x.to_string(),
            r.crop_y.to_string(),
        ];
        rec.extend(r.truth.iter().map(|q| q.to_string()));
        w.write_record(rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_manifest<R: std::io::Read>(input: R) -> Result<Vec<ManifestRow>, EvalError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != manifest_header() {
        return Err(EvalError::Manifest("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| EvalError::Manifest(format!("row {}: invalid {what}", n + 1));
        let num = |i: usize, what: &str| rec[i].parse::<u64>().map_err(|_| bad(what));
        let mut truth = [0u8; TRUTH_LEN];
        for (t, field) in truth.iter_mut().zip(rec.iter().skip(7)) {
            *t = field
                .parse::<u8>()
                .ok()
                .filter(|&q| q > 0)
                .ok_or_else(|| bad("q1 factor"))?;
        }
        rows.push(ManifestRow {
            file: rec[0].to_string(),
            group: rec[1].to_string(),
            source: rec[2].to_string(),
            qf2: num(3, "qf2")? as u32,
            seed: if rec[4].is_empty() {
                None
            } else {
                Some(num(4, "seed")?)
            },
            crop_x: num(5, "crop_x")? as usize,
            crop_y: num(6, "crop_y")? as usize,
            truth,
        });
    }
    if rows.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(rows)
}

/// Outcome tallies for one zig-zag position of one corpus cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PositionStats {
    pub position: usize,
    pub total: usize,
    pub degenerate: usize,
    pub unsupported: usize,
    pub raw_correct: usize,
    pub reg_correct: usize,
    pub raw_accuracy: Option<f64>,
    pub reg_accuracy: Option<f64>,
    /// Share of images whose histogram at this position could not be used.
    pub excluded_fraction: f64,
}

impl PositionStats {
    pub fn predictable(&self) -> usize {
        self.total - self.degenerate - self.unsupported
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub group: String,
    pub qf2: u32,
    pub images: usize,
    /// Correct over predictable, pooled across positions.
    pub raw_accuracy: Option<f64>,
    pub reg_accuracy: Option<f64>,
    pub positions: Vec<PositionStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageRow {
    pub file: String,
    pub group: String,
    pub truth: Vec<u8>,
    pub raw: Vec<Estimate>,
    pub estimates: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub params: EstimationParams,
    pub cells: Vec<CellReport>,
    /// Mean of the per-cell accuracies.
    pub raw_mean: Option<f64>,
    pub reg_mean: Option<f64>,
    pub images: Vec<ImageRow>,
}

fn ratio(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn cell_report(group: &str, qf2: u32, rows: &[&ImageRow], k: usize) -> CellReport {
    let mut positions: Vec<PositionStats> = (0..k)
        .map(|i| PositionStats {
            position: i + 1,
            ..Default::default()
        })
        .collect();
    for r in rows {
        for (i, s) in positions.iter_mut().enumerate() {
            s.total += 1;
            match r.estimates[i] {
                Estimate::Degenerate => s.degenerate += 1,
                Estimate::Unsupported => s.unsupported += 1,
                Estimate::Value(v) => {
                    s.reg_correct += (v == r.truth[i]) as usize;
                    s.raw_correct += (r.raw[i] == Estimate::Value(r.truth[i])) as usize;
                }
            }
        }
    }
    for s in &mut positions {
        s.raw_accuracy = ratio(s.raw_correct, s.predictable());
        s.reg_accuracy = ratio(s.reg_correct, s.predictable());
        s.excluded_fraction = (s.degenerate + s.unsupported) as f64 / s.total.max(1) as f64;
    }
    let predictable: usize = positions.iter().map(PositionStats::predictable).sum();
    CellReport {
        group: group.to_string(),
        qf2,
        images: rows.len(),
        raw_accuracy: ratio(positions.iter().map(|s| s.raw_correct).sum(), predictable),
        reg_accuracy: ratio(positions.iter().map(|s| s.reg_correct).sum(), predictable),
        positions,
    }
}

/// Estimates every corpus file and tallies accuracy per cell and position.
///
/// Each file goes through [`estimate`], the same path as single-image use.
pub fn evaluate(
    items: &[(ManifestRow, Vec<u8>)],
    ds: &ReferenceDataset,
    p: &EstimationParams,
) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if p.k > TRUTH_LEN {
        return Err(EvalError::Spec(format!(
            "k = {} exceeds the {TRUTH_LEN} recorded positions",
            p.k
        )));
    }
    let images: Vec<ImageRow> = items
        .par_iter()
        .map(|(row, bytes)| {
            let r = estimate(bytes, ds, p).map_err(|source| EvalError::Estimate {
                name: row.file.clone(),
                source,
            })?;
            Ok(ImageRow {
                file: row.file.clone(),
                group: row.group.clone(),
                truth: row.truth[..p.k].to_vec(),
                raw: r.raw,
                estimates: r.estimates,
            })
        })
        .collect::<Result<_, EvalError>>()?;

    // Cells in order of first appearance.
    let mut groups: Vec<(String, u32)> = Vec::new();
    for (row, _) in items {
        if !groups.iter().any(|(g, _)| *g == row.group) {
            groups.push((row.group.clone(), row.qf2));
        }
    }
    let cells: Vec<CellReport> = groups
        .iter()
        .map(|(g, qf2)| {
            let rows: Vec<&ImageRow> = images.iter().filter(|r| r.group == *g).collect();
            cell_report(g, *qf2, &rows, p.k)
        })
        .collect();
    Ok(EvalReport {
        params: *p,
        raw_mean: mean(cells.iter().map(|c| c.raw_accuracy)),
        reg_mean: mean(cells.iter().map(|c| c.reg_accuracy)),
        cells,
        images,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl EvalReport {
    /// One row per cell and position, plus an `all` row per cell holding its pooled accuracy.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "group",
            "qf2",
            "position",
            "total",
            "degenerate",
            "unsupported",
            "excluded_fraction",
            "raw_correct",
            "reg_correct",
            "raw_accuracy",
            "reg_accuracy",
        ])?;
        for c in &self.cells {
            for s in &c.positions {
                w.write_record([
                    c.group.clone(),
                    c.qf2.to_string(),
                    s.position.to_string(),
                    s.total.to_string(),
                    s.degenerate.to_string(),
                    s.unsupported.to_string(),
                    format!("{:.6}", s.excluded_fraction),
                    s.raw_correct.to_string(),
                    s.reg_correct.to_string(),
                    fmt_opt(s.raw_accuracy),
                    fmt_opt(s.reg_accuracy),
                ])?;
            }
            let pred: usize = c.positions.iter().map(PositionStats::predictable).sum();
            let total: usize = c.positions.iter().map(|s| s.total).sum();
            w.write_record([
                c.group.clone(),
                c.qf2.to_string(),
                "all".into(),
                total.to_string(),
                c.positions
                    .iter()
                    .map(|s| s.degenerate)
                    .sum::<usize>()
                    .to_string(),
                c.positions
                    .iter()
                    .map(|s| s.unsupported)
                    .sum::<usize>()
                    .to_string(),
                format!("{:.6}", (total - pred) as f64 / total.max(1) as f64),
                c.positions
                    .iter()
                    .map(|s| s.raw_correct)
                    .sum::<usize>()
                    .to_string(),
                c.positions
                    .iter()
                    .map(|s| s.reg_correct)
                    .sum::<usize>()
                    .to_string(),
                fmt_opt(c.raw_accuracy),
                fmt_opt(c.reg_accuracy),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Per-image estimates, one row per file.
    pub fn write_estimates_csv<W: std::io::Write>(&self, out: W) -> Result<(), EvalError> {
        let k = self.params.k;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["file".to_string(), "group".to_string()];
        for prefix in ["truth", "raw", "reg"] {
            header.extend((1..=k).map(|i| format!("{prefix}_{i}")));
        }
        w.write_record(&header)?;
        for r in &self.images {
            let mut rec = vec![r.file.clone(), r.group.clone()];
            rec.extend(r.truth.iter().map(|t| t.to_string()));
            rec.extend(r.raw.iter().map(|e| e.to_string()));
            rec.extend(r.estimates.iter().map(|e| e.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
