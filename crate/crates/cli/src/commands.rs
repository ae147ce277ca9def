use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fqe_core::estimator::{self, EstimateError, EstimationResult, RowStatus};
use fqe_core::eval::{self, CorpusSpec, CropMode, FirstCompression, ManifestRow};
use fqe_core::image::read_pgm;
use fqe_core::refdata::{self, ReferenceDataset};
use fqe_core::{synth as synthetic, EstimationParams, GrayImage};
use serde::Serialize;

use crate::{
    exit, BuildArgs, CorpusArgs, Crop, EstimateArgs, EvaluateArgs, Failure, Format, ParamArgs,
    SynthArgs,
};

const MANIFEST: &str = "manifest.csv";

/// PGM files of `dir`, sorted by name.
fn pgm_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .pgm files in {}", dir.display());
    }
    Ok(files)
}

fn load_pgm(path: &Path) -> anyhow::Result<GrayImage> {
    let bytes = fs::read(path)?;
    Ok(read_pgm(&bytes)?)
}

/// Readable images of `dir`; unreadable ones are reported and skipped.
fn load_sources(dir: &Path) -> anyhow::Result<Vec<(String, GrayImage)>> {
    let mut out = Vec::new();
    let files = pgm_files(dir)?;
    for path in &files {
        match load_pgm(path) {
            Ok(img) => out.push((file_name(path), img)),
            Err(e) => eprintln!("skipping {}: {e:#}", path.display()),
        }
    }
    if out.is_empty() {
        bail!(
            "none of the {} files in {} could be read",
            files.len(),
            dir.display()
        );
    }
    Ok(out)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_dataset(path: &Path) -> Result<ReferenceDataset, Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading dataset {}", path.display()))
        .map_err(|e| Failure::new(exit::DATASET, e))?;
    refdata::deserialize(&bytes)
        .with_context(|| format!("loading dataset {}", path.display()))
        .map_err(|e| Failure::new(exit::DATASET, e))
}

fn params(a: &ParamArgs, ds: &ReferenceDataset) -> EstimationParams {
    EstimationParams {
        k: a.k,
        q1_max: a.q1_max.unwrap_or(ds.q1_max()),
        n_candidates: a.n,
        w: a.w,
        reg_variant: a.reg_variant,
        regularize: !a.no_reg,
    }
}

fn estimate_failure(e: EstimateError, what: &str) -> Failure {
    let code = match e {
        EstimateError::Jpeg(_) => exit::PARSE,
        EstimateError::DatasetMismatch(_) => exit::DATASET,
        EstimateError::Params(_) | EstimateError::EmptyGrid => 1,
    };
    Failure::new(code, anyhow::Error::new(e).context(what.to_string()))
}

pub fn build(a: BuildArgs) -> Result<(), Failure> {
    if a.patch == 0 || a.patch % 8 != 0 {
        return Err(anyhow::anyhow!("--patch must be a positive multiple of 8").into());
    }
    let mut patches = Vec::new();
    let files = pgm_files(&a.raw_dir)?;
    for path in &files {
        let patch = load_pgm(path).and_then(|img| Ok(img.crop_center(a.patch)?));
        match patch {
            Ok(p) => patches.push(p),
            Err(e) => eprintln!("skipping {}: {e:#}", path.display()),
        }
    }
    if patches.is_empty() {
        return Err(anyhow::anyhow!(
            "none of the {} images yielded a {}x{} patch",
            files.len(),
            a.patch,
            a.patch
        )
        .into());
    }
    let ds = refdata::build_reference(&patches, a.q1_max, a.k).context("building dataset")?;
    let bytes = refdata::serialize(&ds).context("serializing dataset")?;
    fs::write(&a.out, bytes).with_context(|| format!("writing {}", a.out.display()))?;
    println!("q1\tq2\tdc\tac");
    for s in ds.subs() {
        println!("{}\t{}\t{}\t{}", s.q1, s.q2, s.dc.len(), s.ac.len());
    }
    let (dc, ac) = ds.total_records();
    eprintln!(
        "{} patches, {} sub-datasets, {dc} DC and {ac} AC records -> {}",
        patches.len(),
        ds.subs().len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ParamsJson {
    k: usize,
    q1_max: u32,
    n: usize,
    w: f64,
    reg_variant: fqe_core::RegVariant,
    regularize: bool,
}

#[derive(Serialize)]
struct PositionJson {
    position: usize,
    q2: u8,
    status: RowStatus,
    estimate: fqe_core::Estimate,
    raw: fqe_core::Estimate,
    distance: Option<f64>,
}

#[derive(Serialize)]
struct EstimateJson {
    image: String,
    params: ParamsJson,
    regularization_skipped: bool,
    positions: Vec<PositionJson>,
}

fn positions(r: &EstimationResult) -> Vec<PositionJson> {
    r.estimates
        .iter()
        .zip(&r.raw)
        .zip(&r.distances.rows)
        .enumerate()
        .map(|(i, ((e, raw), row))| PositionJson {
            position: i + 1,
            q2: row.q2,
            status: row.status,
            estimate: *e,
            raw: *raw,
            distance: e.value().and_then(|v| r.distances.distance(i, v as u32)),
        })
        .collect()
}

pub fn estimate(a: EstimateArgs) -> Result<(), Failure> {
    let ds = load_dataset(&a.dataset)?;
    let bytes = fs::read(&a.image)
        .with_context(|| format!("reading {}", a.image.display()))
        .map_err(|e| Failure::new(exit::PARSE, e))?;
    let p = params(&a.params, &ds);
    let r = estimator::estimate(&bytes, &ds, &p)
        .map_err(|e| estimate_failure(e, &a.image.display().to_string()))?;
    if r.regularization_skipped {
        eprintln!("warning: fewer than three usable coefficients; regularization skipped");
    }
    let rows = positions(&r);
    let mut out = std::io::stdout().lock();
    match a.format {
        Format::Json => {
            let doc = EstimateJson {
                image: a.image.display().to_string(),
                params: ParamsJson {
                    k: p.k,
                    q1_max: p.q1_max,
                    n: p.n_candidates,
                    w: p.w,
                    reg_variant: p.reg_variant,
                    regularize: p.regularize,
                },
                regularization_skipped: r.regularization_skipped,
                positions: rows,
            };
            serde_json::to_writer_pretty(&mut out, &doc).context("writing report")?;
            std::io::Write::write_all(&mut out, b"\n").context("writing report")?;
        }
        Format::Csv => {
            use std::io::Write;
            let write = |out: &mut std::io::StdoutLock| -> std::io::Result<()> {
                writeln!(out, "position,q2,status,estimate,raw,distance")?;
                for row in &rows {
                    let status = match row.status {
                        RowStatus::Ok => "ok",
                        RowStatus::Degenerate => "degenerate",
                        RowStatus::Unsupported => "unsupported",
                    };
                    let d = row.distance.map(|d| format!("{d:.9}")).unwrap_or_default();
                    writeln!(
                        out,
                        "{},{},{status},{},{},{d}",
                        row.position, row.q2, row.estimate, row.raw
                    )?;
                }
                Ok(())
            };
            write(&mut out).context("writing report")?;
        }
    }
    let any_ok = r
        .distances
        .rows
        .iter()
        .any(|row| row.status == RowStatus::Ok);
    let any_unsupported = r
        .distances
        .rows
        .iter()
        .any(|row| row.status == RowStatus::Unsupported);
    if !any_ok && any_unsupported {
        return Err(Failure::new(
            exit::UNSUPPORTED,
            anyhow::anyhow!("no coefficient has a second factor covered by the dataset"),
        ));
    }
    Ok(())
}

pub fn make_corpus(a: CorpusArgs) -> Result<(), Failure> {
    let first: Vec<FirstCompression> = match &a.tables {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            eval::parse_table_file(&text)
                .with_context(|| format!("parsing {}", path.display()))?
                .into_iter()
                .enumerate()
                .map(|(i, table)| FirstCompression::Table {
                    label: format!("table{}", i + 1),
                    table,
                })
                .collect()
        }
        None => a
            .qf1
            .iter()
            .map(|&q| FirstCompression::Quality(q))
            .collect(),
    };
    let crop = match (a.crop, a.seed) {
        (Crop::Center, _) => CropMode::Center,
        (Crop::Random, Some(seed)) => CropMode::Random { seed },
        (Crop::Random, None) => return Err(anyhow::anyhow!("--crop random requires --seed").into()),
    };
    let spec = CorpusSpec {
        first,
        qf2: a.qf2,
        patch: a.patch,
        crop,
    };
    let sources = load_sources(&a.raw_dir)?;
    let items = eval::make_corpus(&sources, &spec).context("making corpus")?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for it in &items {
        let path = a.out_dir.join(&it.row.file);
        fs::write(&path, &it.jpeg).with_context(|| format!("writing {}", path.display()))?;
    }
    let rows: Vec<ManifestRow> = items.into_iter().map(|i| i.row).collect();
    let manifest = a.out_dir.join(MANIFEST);
    let f =
        fs::File::create(&manifest).with_context(|| format!("creating {}", manifest.display()))?;
    eval::write_manifest(&rows, std::io::BufWriter::new(f)).context("writing manifest")?;
    eprintln!(
        "{} files in {} cells from {} sources -> {}",
        rows.len(),
        spec.first.len(),
        sources.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn fmt_acc(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let ds = load_dataset(&a.dataset)?;
    let manifest = a.corpus_dir.join(MANIFEST);
    let f = fs::File::open(&manifest).with_context(|| format!("opening {}", manifest.display()))?;
    let rows = eval::read_manifest(std::io::BufReader::new(f)).context("reading manifest")?;
    let mut items = Vec::with_capacity(rows.len());
    for row in rows {
        let path = a.corpus_dir.join(&row.file);
        let bytes = fs::read(&path)
            .with_context(|| format!("manifest lists {}, which cannot be read", path.display()))?;
        items.push((row, bytes));
    }
    let p = params(&a.params, &ds);
    let report = eval::evaluate(&items, &ds, &p).map_err(|e| match e {
        eval::EvalError::Estimate { name, source } => estimate_failure(source, &name),
        other => Failure::from(anyhow::Error::new(other)),
    })?;

    let out_dir = a.out_dir.unwrap_or(a.corpus_dir);
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let create = |name: &str| -> anyhow::Result<std::io::BufWriter<fs::File>> {
        let path = out_dir.join(name);
        Ok(std::io::BufWriter::new(
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    };
    report
        .write_csv(create("report.csv")?)
        .context("writing report.csv")?;
    report
        .write_estimates_csv(create("estimates.csv")?)
        .context("writing estimates.csv")?;
    let mut json = create("report.json")?;
    serde_json::to_writer_pretty(&mut json, &report).context("writing report.json")?;
    std::io::Write::flush(&mut json).context("writing report.json")?;

    println!("cell\tqf2\timages\traw\treg\texcluded");
    for c in &report.cells {
        let total: usize = c.positions.iter().map(|s| s.total).sum();
        let excluded: usize = c
            .positions
            .iter()
            .map(|s| s.degenerate + s.unsupported)
            .sum();
        println!(
            "{}\t{}\t{}\t{}\t{}\t{:.1}%",
            c.group,
            c.qf2,
            c.images,
            fmt_acc(c.raw_accuracy),
            fmt_acc(c.reg_accuracy),
            100.0 * excluded as f64 / total.max(1) as f64
        );
    }
    println!(
        "mean\t\t\t{}\t{}",
        fmt_acc(report.raw_mean),
        fmt_acc(report.reg_mean)
    );
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<(), Failure> {
    if a.size == 0 {
        return Err(anyhow::anyhow!("--size must be positive").into());
    }
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for i in 0..a.count as u64 {
        let seed = a.seed + i;
        let path = a.out_dir.join(format!("synth{seed:06}.pgm"));
        let img = synthetic::image(seed, a.size, a.size);
        fs::write(&path, img.to_pgm()).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("{} images -> {}", a.count, a.out_dir.display());
    Ok(())
}
