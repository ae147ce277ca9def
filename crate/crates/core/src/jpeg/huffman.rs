//! Huffman tables: the standard luminance tables and canonical code construction.

use super::JpegError;

pub const STD_DC_LUMA_BITS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
pub const STD_DC_LUMA_VALUES: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

pub const STD_AC_LUMA_BITS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
pub const STD_AC_LUMA_VALUES: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
];

/// Canonical code assignment: `(code, length)` for each value in table order.
fn canonical_codes(bits: &[u8; 16], values: &[u8]) -> Result<Vec<(u16, u8)>, JpegError> {
    let total: usize = bits.iter().map(|&b| b as usize).sum();
    if total != values.len() || total > 256 {
        return Err(JpegError::Malformed("huffman table value count"));
    }
    let mut out = Vec::with_capacity(total);
    let mut code: u32 = 0;
    for (len_minus_one, &count) in bits.iter().enumerate() {
        let len = len_minus_one as u8 + 1;
        for _ in 0..count {
            if code >= (1 << len) {
                return Err(JpegError::Malformed("huffman code space overflow"));
            }
            out.push((code as u16, len));
            code += 1;
        }
        code <<= 1;
    }
    Ok(out)
}

/// Encoder-side lookup: value -> (code, length).
#[derive(Debug, Clone)]
pub struct EncodeTable {
    codes: [(u16, u8); 256],
}

impl EncodeTable {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Result<Self, JpegError> {
        let mut codes = [(0u16, 0u8); 256];
        for (&v, c) in values.iter().zip(canonical_codes(bits, values)?) {
            codes[v as usize] = c;
        }
        Ok(EncodeTable { codes })
    }

    /// `(code, length)`; length 0 means the symbol has no code.
    #[inline]
    pub fn code(&self, symbol: u8) -> (u16, u8) {
        self.codes[symbol as usize]
    }
}

/// Decoder-side table using the max-code procedure of the JPEG standard.
#[derive(Debug, Clone)]
pub struct DecodeTable {
    // Indexed by code length 1..=16; index 0 unused.
    maxcode: [i32; 17],
    mincode: [i32; 17],
    valptr: [usize; 17],
    values: Vec<u8>,
}

impl DecodeTable {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Result<Self, JpegError> {
        let codes = canonical_codes(bits, values)?;
        let mut maxcode = [-1i32; 17];
        let mut mincode = [0i32; 17];
        let mut valptr = [0usize; 17];
        let mut k = 0usize;
        for len in 1..=16usize {
            let count = bits[len - 1] as usize;
            if count > 0 {
                valptr[len] = k;
                mincode[len] = codes[k].0 as i32;
                k += count;
                maxcode[len] = codes[k - 1].0 as i32;
            }
        }
        Ok(DecodeTable {
            maxcode,
            mincode,
            valptr,
            values: values.to_vec(),
        })
    }

    /// Decodes one symbol, pulling bits one at a time from `next_bit`.
    #[inline]
    pub fn decode(
        &self,
        mut next_bit: impl FnMut() -> Result<u32, JpegError>,
    ) -> Result<u8, JpegError> {
        let mut code = next_bit()? as i32;
        for len in 1..=16 {
            if code <= self.maxcode[len] {
                let idx = self.valptr[len] + (code - self.mincode[len]) as usize;
                return Ok(self.values[idx]);
            }
            if len < 16 {
                code = (code << 1) | next_bit()? as i32;
            }
        }
        Err(JpegError::BadHuffmanCode)
    }
}
