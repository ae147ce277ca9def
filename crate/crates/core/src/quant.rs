//! Quantization tables, zig-zag ordering and table constructors.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Maps a zig-zag scan index (0-based) to its natural row-major index.
pub const ZIGZAG_TO_NATURAL: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
    13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59,
    52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Luminance base table from the example annex of the JPEG standard, natural order.
pub const STD_LUMA_BASE: [u8; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("quantization factor {value} at natural index {index} is outside [1, 255]")]
    FactorOutOfRange { index: usize, value: u32 },
    #[error("quality factor {0} is outside [1, 100]")]
    QualityOutOfRange(u32),
    #[error("constant factor {0} is outside [1, 255]")]
    ConstantOutOfRange(u32),
    #[error("zig-zag position {0} is outside [1, 64]")]
    PositionOutOfRange(usize),
    #[error("expected 64 factors, got {0}")]
    WrongLength(usize),
}

/// An 8x8 grid of quantization factors, stored in natural (row-major) order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct QuantTable {
    factors: [u8; 64],
}

impl QuantTable {
    /// Builds a table from natural-order factors, rejecting anything outside `[1, 255]`.
    pub fn from_natural<T: Copy + Into<u32>>(factors: &[T]) -> Result<Self, TableError> {
        if factors.len() != 64 {
            return Err(TableError::WrongLength(factors.len()));
        }
        let mut out = [0u8; 64];
        for (index, (slot, &value)) in out.iter_mut().zip(factors).enumerate() {
            let value: u32 = value.into();
            if !(1..=255).contains(&value) {
                return Err(TableError::FactorOutOfRange { index, value });
            }
            *slot = value as u8;
        }
        Ok(QuantTable { factors: out })
    }

    pub fn from_zigzag<T: Copy + Into<u32>>(factors: &[T]) -> Result<Self, TableError> {
        if factors.len() != 64 {
            return Err(TableError::WrongLength(factors.len()));
        }
        let mut natural = [0u32; 64];
        for (zz, &value) in factors.iter().enumerate() {
            natural[ZIGZAG_TO_NATURAL[zz]] = value.into();
        }
        Self::from_natural(&natural)
    }

    pub fn natural(&self) -> &[u8; 64] {
        &self.factors
    }

    pub fn zigzag(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        for (zz, slot) in out.iter_mut().enumerate() {
            *slot = self.factors[ZIGZAG_TO_NATURAL[zz]];
        }
        out
    }

    /// Factor at 0-based zig-zag index `zz`.
    #[inline]
    pub fn at_zigzag(&self, zz: usize) -> u8 {
        self.factors[ZIGZAG_TO_NATURAL[zz]]
    }

    /// The first `k` factors in zig-zag order.
    pub fn first_zigzag(&self, k: usize) -> Vec<u8> {
        (0..k.min(64)).map(|zz| self.at_zigzag(zz)).collect()
    }

    pub fn max_factor(&self) -> u8 {
        *self.factors.iter().max().expect("64 factors")
    }
}

impl fmt::Debug for QuantTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QuantTable [")?;
        for row in self.factors.chunks(8) {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

impl TryFrom<Vec<u32>> for QuantTable {
    type Error = TableError;

    fn try_from(v: Vec<u32>) -> Result<Self, Self::Error> {
        QuantTable::from_natural(&v)
    }
}

impl From<QuantTable> for Vec<u32> {
    fn from(t: QuantTable) -> Self {
        t.factors.iter().map(|&f| f as u32).collect()
    }
}

/// IJG quality scaling of the standard luminance table.
pub fn standard_table(qf: u32) -> Result<QuantTable, TableError> {
    if !(1..=100).contains(&qf) {
        return Err(TableError::QualityOutOfRange(qf));
    }
    let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let mut natural = [0u32; 64];
    for (slot, &base) in natural.iter_mut().zip(STD_LUMA_BASE.iter()) {
        *slot = ((base as u32 * scale + 50) / 100).clamp(1, 255);
    }
    QuantTable::from_natural(&natural)
}

/// Table with all 64 factors equal to `value`.
pub fn constant_table(value: u32) -> Result<QuantTable, TableError> {
    if !(1..=255).contains(&value) {
        return Err(TableError::ConstantOutOfRange(value));
    }
    Ok(QuantTable {
        factors: [value as u8; 64],
    })
}

/// `(row, col)` of the 1-based zig-zag position `i`.
pub fn zigzag_position(i: usize) -> Result<(usize, usize), TableError> {
    if !(1..=64).contains(&i) {
        return Err(TableError::PositionOutOfRange(i));
    }
    let natural = ZIGZAG_TO_NATURAL[i - 1];
    Ok((natural / 8, natural % 8))
}
