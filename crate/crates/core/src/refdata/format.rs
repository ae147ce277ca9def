//! Binary dataset file, little-endian.
//!
//! ```text
//! header   "FQE1" | version u16 | q1_max u8 | k u8 | patch side u16 | sources u32 | 16 reserved
//! body     per (q1, q2) row-major: dc_count u32 | ac_count u32 | dc records | ac records
//! record   key f64 | support_len u16 | support_len x (value i16, mass f32) | count u32
//! trailer  CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! Masses are stored as `f32`, but each bin's integer count is recovered as
//! `round(mass * count)` and re-checked against the stored mass, so the
//! in-memory histograms survive a round trip exactly.

use super::{RecordList, RefError, ReferenceDataset};
use crate::stats::{fit_laplacian, Bin, HistRef};

pub const MAGIC: [u8; 4] = *b"FQE1";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 2 + 4 + 16;

fn write_list(out: &mut Vec<u8>, list: &RecordList) -> Result<(), RefError> {
    for r in list.iter() {
        out.extend_from_slice(&r.key.to_le_bytes());
        let bins = r.hist.bins();
        let len = u16::try_from(bins.len())
            .map_err(|_| RefError::Corrupt("support longer than 65535"))?;
        out.extend_from_slice(&len.to_le_bytes());
        let total = r.hist.count() as f64;
        for b in bins {
            let v = i16::try_from(b.value).map_err(|_| RefError::ValueOutOfRange(b.value))?;
            out.extend_from_slice(&v.to_le_bytes());
            out.extend_from_slice(&((b.count as f64 / total) as f32).to_le_bytes());
        }
        out.extend_from_slice(&r.hist.count().to_le_bytes());
    }
    Ok(())
}

pub fn serialize(ds: &ReferenceDataset) -> Result<Vec<u8>, RefError> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(ds.q1_max);
    out.push(ds.k);
    out.extend_from_slice(&ds.patch_side.to_le_bytes());
    out.extend_from_slice(&ds.source_count.to_le_bytes());
    out.extend_from_slice(&[0u8; 16]);
    for sub in &ds.subs {
        out.extend_from_slice(&(sub.dc.len() as u32).to_le_bytes());
        out.extend_from_slice(&(sub.ac.len() as u32).to_le_bytes());
        write_list(&mut out, &sub.dc)?;
        write_list(&mut out, &sub.ac)?;
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RefError> {
        let s = self
            .data
            .get(self.pos..self.pos + n)
            .ok_or(RefError::Truncated)?;
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, RefError> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32, RefError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}

fn read_list(c: &mut Cursor<'_>, count: u32, use_mu: bool) -> Result<RecordList, RefError> {
    let mut list = RecordList::new();
    let mut bins: Vec<Bin> = Vec::new();
    let mut masses: Vec<f32> = Vec::new();
    for _ in 0..count {
        let key = f64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes"));
        let len = c.u16()? as usize;
        bins.clear();
        masses.clear();
        for _ in 0..len {
            let value = i16::from_le_bytes(c.take(2)?.try_into().expect("2 bytes")) as i32;
            let mass = f32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
            bins.push(Bin { value, count: 0 });
            masses.push(mass);
        }
        let total = c.u32()?;
        if len == 0 || total == 0 {
            return Err(RefError::Corrupt("empty histogram record"));
        }
        let mut sum = 0u64;
        for (b, &m) in bins.iter_mut().zip(&masses) {
            if !m.is_finite() || m <= 0.0 || m > 1.0 {
                return Err(RefError::Corrupt("bin mass outside (0, 1]"));
            }
            let n = (m as f64 * total as f64).round() as u32;
            if n == 0 || (n as f64 / total as f64) as f32 != m {
                return Err(RefError::Corrupt("bin mass is not a count ratio"));
            }
            b.count = n;
            sum += n as u64;
        }
        if sum != total as u64 {
            return Err(RefError::Corrupt(
                "bin counts do not sum to the sample count",
            ));
        }
        if !bins.windows(2).all(|w| w[0].value < w[1].value) {
            return Err(RefError::Corrupt("support not strictly increasing"));
        }
        let hist = HistRef::from_parts(&bins, total);
        let fit = fit_laplacian(hist);
        let expected = if use_mu { fit.mu } else { fit.beta };
        if key.to_bits() != expected.to_bits() {
            return Err(RefError::Corrupt("record key disagrees with its histogram"));
        }
        if list.keys.last().is_some_and(|&last| last > key) {
            return Err(RefError::Corrupt("records not sorted by key"));
        }
        list.push(key, hist);
    }
    Ok(list)
}

pub fn deserialize(bytes: &[u8]) -> Result<ReferenceDataset, RefError> {
    if bytes.len() < 6 {
        return Err(RefError::Truncated);
    }
    if bytes[..4] != MAGIC {
        return Err(RefError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(RefError::UnsupportedVersion(version));
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(RefError::Truncated);
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(RefError::Checksum { stored, computed });
    }

    let mut c = Cursor { data: body, pos: 6 };
    let q1_max = c.take(1)?[0];
    let k = c.take(1)?[0];
    let patch_side = c.u16()?;
    let source_count = c.u32()?;
    c.take(16)?;
    if q1_max == 0 || !(2..=64).contains(&k) {
        return Err(RefError::Corrupt("header parameters out of range"));
    }
    let mut ds = ReferenceDataset::empty(q1_max, k, patch_side, source_count);
    for sub in &mut ds.subs {
        let dc_count = c.u32()?;
        let ac_count = c.u32()?;
        sub.dc = read_list(&mut c, dc_count, true)?;
        sub.ac = read_list(&mut c, ac_count, false)?;
    }
    if c.pos != body.len() {
        return Err(RefError::Corrupt("trailing bytes after last sub-dataset"));
    }
    Ok(ds)
}
