//! Reference distributions of simulated double compressions.
//!
//! For every pair `(q1, q2)` of constant quantization matrices the dataset
//! holds a DC list keyed by the Laplacian location and an AC list keyed by the
//! Laplacian scale, both sorted ascending so that a query can pull the records
//! with the nearest keys by binary search.

mod build;
mod format;

pub use build::{build_reference, patch_records, BuildParams};
pub use format::{deserialize, serialize, FORMAT_VERSION, MAGIC};

use crate::stats::{chi2, Bin, CoeffHistogram, HistRef};
use std::ops::Range;

/// Default number of nearest-key candidates compared per sub-dataset.
pub const DEFAULT_CANDIDATES: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RefError {
    #[error("no patches supplied")]
    EmptyPatchSet,
    #[error("patch {index}: {reason}")]
    InvalidPatch { index: usize, reason: String },
    #[error("invalid build parameters: {0}")]
    InvalidParams(String),
    #[error("no sub-dataset for (q1={q1}, q2={q2}); dataset covers 1..={q1_max}")]
    UnknownSubDataset { q1: u32, q2: u32, q1_max: u32 },
    #[error("no candidate records to compare against")]
    NoCandidates,
    #[error("not a dataset file (bad magic)")]
    BadMagic,
    #[error("unsupported dataset format version {0}")]
    UnsupportedVersion(u16),
    #[error("dataset checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("dataset file truncated")]
    Truncated,
    #[error("corrupt dataset: {0}")]
    Corrupt(&'static str),
    #[error("coefficient value {0} does not fit the 16-bit record format")]
    ValueOutOfRange(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Dc,
    Ac,
}

/// One reference histogram and its sort key (location for DC, scale for AC).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefRecord<'a> {
    pub key: f64,
    pub hist: HistRef<'a>,
}

/// Sorted list of records sharing one bin arena.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordList {
    keys: Vec<f64>,
    totals: Vec<u32>,
    // offsets[i]..offsets[i + 1] indexes `bins` for record i.
    offsets: Vec<u32>,
    bins: Vec<Bin>,
}

impl RecordList {
    fn new() -> Self {
        RecordList {
            offsets: vec![0],
            ..Default::default()
        }
    }

    pub(crate) fn push(&mut self, key: f64, hist: HistRef<'_>) {
        self.keys.push(key);
        self.totals.push(hist.count());
        self.bins.extend_from_slice(hist.bins());
        self.offsets.push(self.bins.len() as u32);
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    pub fn get(&self, i: usize) -> RefRecord<'_> {
        let bins = &self.bins[self.offsets[i] as usize..self.offsets[i + 1] as usize];
        RefRecord {
            key: self.keys[i],
            hist: HistRef::from_parts(bins, self.totals[i]),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = RefRecord<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn records(&self, range: Range<usize>) -> impl Iterator<Item = RefRecord<'_>> + '_ {
        range.map(move |i| self.get(i))
    }

    /// Stable sort by key; insertion order breaks ties.
    pub(crate) fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.keys[a].total_cmp(&self.keys[b]));
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return;
        }
        let mut sorted = RecordList::new();
        sorted.keys.reserve(self.len());
        sorted.bins.reserve(self.bins.len());
        for i in order {
            let r = self.get(i);
            sorted.push(r.key, r.hist);
        }
        *self = sorted;
    }

    #[cfg(test)]
    pub(crate) fn is_sorted(&self) -> bool {
        self.keys.windows(2).all(|w| w[0] <= w[1])
    }

    /// Contiguous index range of the `n` records whose keys are nearest to `key`.
    ///
    /// Grows a window outward from the insertion point, taking the closer side
    /// each step and the lower side on equal distance.
    pub fn nearest_range(&self, key: f64, n: usize) -> Range<usize> {
        let len = self.len();
        if n >= len {
            return 0..len;
        }
        let idx = self.keys.partition_point(|&k| k < key);
        let (mut lo, mut hi) = (idx, idx);
        while hi - lo < n {
            let take_left = match (lo > 0, hi < len) {
                (true, true) => key - self.keys[lo - 1] <= self.keys[hi] - key,
                (true, false) => true,
                (false, true) => false,
                (false, false) => break,
            };
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        lo..hi
    }
}

/// All records generated with first factor `q1` and second factor `q2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDataset {
    pub q1: u8,
    pub q2: u8,
    pub dc: RecordList,
    pub ac: RecordList,
}

impl SubDataset {
    fn new(q1: u8, q2: u8) -> Self {
        SubDataset {
            q1,
            q2,
            dc: RecordList::new(),
            ac: RecordList::new(),
        }
    }

    pub fn list(&self, kind: Kind) -> &RecordList {
        match kind {
            Kind::Dc => &self.dc,
            Kind::Ac => &self.ac,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDataset {
    q1_max: u8,
    k: u8,
    patch_side: u16,
    source_count: u32,
    // Row-major over (q1, q2).
    subs: Vec<SubDataset>,
}

impl ReferenceDataset {
    pub(crate) fn empty(q1_max: u8, k: u8, patch_side: u16, source_count: u32) -> Self {
        let mut subs = Vec::with_capacity(q1_max as usize * q1_max as usize);
        for q1 in 1..=q1_max {
            for q2 in 1..=q1_max {
                subs.push(SubDataset::new(q1, q2));
            }
        }
        ReferenceDataset {
            q1_max,
            k,
            patch_side,
            source_count,
            subs,
        }
    }

    pub fn q1_max(&self) -> u32 {
        self.q1_max as u32
    }

    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn patch_side(&self) -> usize {
        self.patch_side as usize
    }

    pub fn source_count(&self) -> u32 {
        self.source_count
    }

    pub fn subs(&self) -> &[SubDataset] {
        &self.subs
    }

    fn index(&self, q1: u32, q2: u32) -> Result<usize, RefError> {
        let m = self.q1_max as u32;
        if q1 == 0 || q2 == 0 || q1 > m || q2 > m {
            return Err(RefError::UnknownSubDataset { q1, q2, q1_max: m });
        }
        Ok(((q1 - 1) * m + (q2 - 1)) as usize)
    }

    pub fn sub(&self, q1: u32, q2: u32) -> Result<&SubDataset, RefError> {
        Ok(&self.subs[self.index(q1, q2)?])
    }

    pub(crate) fn sub_mut(&mut self, q1: u32, q2: u32) -> &mut SubDataset {
        let i = self.index(q1, q2).expect("in range");
        &mut self.subs[i]
    }

    pub fn total_records(&self) -> (usize, usize) {
        self.subs
            .iter()
            .fold((0, 0), |(d, a), s| (d + s.dc.len(), a + s.ac.len()))
    }

    /// The `n` records of `(q1, q2)` whose keys are nearest to `key`.
    pub fn query(
        &self,
        q1: u32,
        q2: u32,
        kind: Kind,
        key: f64,
        n: usize,
    ) -> Result<Vec<RefRecord<'_>>, RefError> {
        let list = self.sub(q1, q2)?.list(kind);
        Ok(list.records(list.nearest_range(key, n)).collect())
    }
}

/// Smallest chi-square distance from `h` to any candidate.
pub fn min_distance<'a, 'b>(
    h: impl Into<HistRef<'a>>,
    candidates: impl IntoIterator<Item = RefRecord<'b>>,
) -> Result<f64, RefError> {
    let h = h.into();
    candidates
        .into_iter()
        .map(|r| chi2(h, r.hist))
        .min_by(f64::total_cmp)
        .ok_or(RefError::NoCandidates)
}

/// Convenience for tests and tools: owned copy of every record in a list.
pub fn owned_records(list: &RecordList) -> Vec<(f64, CoeffHistogram)> {
    list.iter().map(|r| (r.key, r.hist.to_owned())).collect()
}
