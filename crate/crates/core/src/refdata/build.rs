use rayon::prelude::*;

use super::{RefError, ReferenceDataset};
use crate::dct::{dequantize, fdct_block, idct_block, quantize, quantize_coeff, FreqBlock};
use crate::image::GrayImage;
use crate::quant::{constant_table, ZIGZAG_TO_NATURAL};
use crate::sim;
use crate::stats::{fit_laplacian, is_degenerate, CoeffHistogram};

/// Patches processed per parallel batch; bounds the transient per-patch histograms.
const BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildParams {
    pub q1_max: u32,
    pub k: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams { q1_max: 22, k: 15 }
    }
}

/// Non-degenerate histograms one patch contributes to one sub-dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatchRecords {
    pub dc: Option<CoeffHistogram>,
    pub ac: Vec<CoeffHistogram>,
}

fn validate(patches: &[GrayImage], params: BuildParams) -> Result<usize, RefError> {
    if patches.is_empty() {
        return Err(RefError::EmptyPatchSet);
    }
    if !(1..=255).contains(&params.q1_max) {
        return Err(RefError::InvalidParams(format!(
            "q1_max {} outside 1..=255",
            params.q1_max
        )));
    }
    if !(2..=64).contains(&params.k) {
        return Err(RefError::InvalidParams(format!(
            "k {} outside 2..=64",
            params.k
        )));
    }
    let side = patches[0].width();
    if side > u16::MAX as usize {
        return Err(RefError::InvalidPatch {
            index: 0,
            reason: format!("side {side} too large"),
        });
    }
    for (index, p) in patches.iter().enumerate() {
        let reason = if p.width() != p.height() {
            format!("{}x{} is not square", p.width(), p.height())
        } else if p.width() % 8 != 0 {
            format!("side {} is not a multiple of 8", p.width())
        } else if p.width() != side {
            format!("side {} differs from the first patch ({side})", p.width())
        } else {
            continue;
        };
        return Err(RefError::InvalidPatch { index, reason });
    }
    Ok(side)
}

/// Histograms of the first `k` zig-zag coefficients of `patch` double-compressed
/// with every pair of constant matrices, row-major over `(q1, q2)`.
pub fn patch_records(
    patch: &GrayImage,
    q1_max: u32,
    k: usize,
) -> Result<Vec<PatchRecords>, RefError> {
    let blocks: Vec<FreqBlock> =
        sim::forward_blocks(patch).map_err(|e| RefError::InvalidPatch {
            index: 0,
            reason: e.to_string(),
        })?;
    let mut out = Vec::with_capacity((q1_max * q1_max) as usize);
    let mut values = vec![0i32; blocks.len()];
    for q1 in 1..=q1_max {
        let t1 = constant_table(q1).expect("validated range");
        // Pixels after the first compression, transformed again for the second.
        let second: Vec<FreqBlock> = blocks
            .iter()
            .map(|f| fdct_block(&idct_block(&dequantize(&quantize(f, &t1), &t1))))
            .collect();
        for q2 in 1..=q1_max {
            let mut rec = PatchRecords::default();
            for (zz, &n) in ZIGZAG_TO_NATURAL.iter().enumerate().take(k) {
                for (v, f) in values.iter_mut().zip(&second) {
                    *v = quantize_coeff(f[n], q2 as u8);
                }
                let h =
                    CoeffHistogram::from_values(values.iter().copied()).expect("non-empty patch");
                if is_degenerate(&h) {
                    continue;
                }
                if zz == 0 {
                    rec.dc = Some(h);
                } else {
                    rec.ac.push(h);
                }
            }
            out.push(rec);
        }
    }
    Ok(out)
}

/// Builds the sorted reference dataset from raw patches.
///
/// Output is a pure function of the inputs: records are appended in patch order
/// and sorted stably, so thread scheduling cannot change the result.
pub fn build_reference(
    patches: &[GrayImage],
    q1_max: u32,
    k: usize,
) -> Result<ReferenceDataset, RefError> {
    let params = BuildParams { q1_max, k };
    let side = validate(patches, params)?;
    let mut ds = ReferenceDataset::empty(q1_max as u8, k as u8, side as u16, patches.len() as u32);

    for batch in patches.chunks(BATCH) {
        let results: Vec<Result<Vec<PatchRecords>, RefError>> = batch
            .par_iter()
            .map(|p| patch_records(p, q1_max, k))
            .collect();
        for per_patch in results {
            for (i, rec) in per_patch?.into_iter().enumerate() {
                let (q1, q2) = (i as u32 / q1_max + 1, i as u32 % q1_max + 1);
                let sub = ds.sub_mut(q1, q2);
                if let Some(h) = rec.dc {
                    sub.dc.push(fit_laplacian(&h).mu, h.as_ref());
                }
                for h in rec.ac {
                    sub.ac.push(fit_laplacian(&h).beta, h.as_ref());
                }
            }
        }
    }
    for sub in &mut ds.subs {
        sub.dc.sort();
        sub.ac.sort();
    }
    Ok(ds)
}
