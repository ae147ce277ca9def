//! Single-component baseline JPEG encoder with the standard luminance Huffman tables.

use super::huffman::{
    EncodeTable, STD_AC_LUMA_BITS, STD_AC_LUMA_VALUES, STD_DC_LUMA_BITS, STD_DC_LUMA_VALUES,
};
use super::marker;
use crate::grid::CoeffGrid;
use crate::image::GrayImage;
use crate::quant::QuantTable;
use crate::sim;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("image {width}x{height} exceeds the 65535 pixel limit of a JPEG frame")]
    TooLarge { width: usize, height: usize },
    #[error("coefficient {0} does not fit a baseline magnitude category")]
    CoefficientRange(i32),
}

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        BitWriter {
            out,
            acc: 0,
            nbits: 0,
        }
    }

    #[inline]
    fn put(&mut self, code: u32, len: u8) {
        debug_assert!(len <= 16);
        self.acc = (self.acc << len) | (code & ((1u32 << len) - 1));
        self.nbits += len as u32;
        while self.nbits >= 8 {
            let byte = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00);
            }
            self.nbits -= 8;
        }
        self.acc &= (1u32 << self.nbits) - 1;
    }

    /// Pads the last partial byte with 1-bits.
    fn flush(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits as u8;
            self.put((1 << pad) - 1, pad);
        }
    }

    fn into_inner(mut self) -> Vec<u8> {
        self.flush();
        self.out
    }
}

/// Magnitude category (bit length) of `v`.
#[inline]
pub(crate) fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

/// Baseline grayscale encoder.
#[derive(Debug, Clone, Default)]
pub struct Encoder {
    restart_interval: u16,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Emits a restart marker every `blocks` blocks (0 disables restarts).
    pub fn restart_interval(mut self, blocks: u16) -> Self {
        self.restart_interval = blocks;
        self
    }

    /// Encodes `img`; edges are padded to whole blocks by replication.
    pub fn encode(&self, img: &GrayImage, table: &QuantTable) -> Result<Vec<u8>, EncodeError> {
        if img.width() > 0xFFFF || img.height() > 0xFFFF {
            return Err(EncodeError::TooLarge {
                width: img.width(),
                height: img.height(),
            });
        }
        let grid = sim::quantize_image(&img.pad_to_blocks(), table).expect("padded to blocks");
        self.encode_grid(&grid, table, img.width() as u16, img.height() as u16)
    }

    /// Entropy-codes an already quantized grid as a `width`x`height` frame.
    pub fn encode_grid(
        &self,
        grid: &CoeffGrid,
        table: &QuantTable,
        width: u16,
        height: u16,
    ) -> Result<Vec<u8>, EncodeError> {
        debug_assert_eq!(grid.width_blocks(), (width as usize).div_ceil(8));
        debug_assert_eq!(grid.height_blocks(), (height as usize).div_ceil(8));
        let dc_table = EncodeTable::new(&STD_DC_LUMA_BITS, &STD_DC_LUMA_VALUES).expect("standard");
        let ac_table = EncodeTable::new(&STD_AC_LUMA_BITS, &STD_AC_LUMA_VALUES).expect("standard");

        let mut out = Vec::with_capacity(1024 + grid.len() * 16);
        out.extend_from_slice(&[0xFF, marker::SOI]);
        segment(
            &mut out,
            marker::APP0,
            &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0],
        );

        let mut dqt = vec![0x00];
        dqt.extend_from_slice(&table.zigzag());
        segment(&mut out, marker::DQT, &dqt);

        let mut sof = vec![8];
        sof.extend_from_slice(&height.to_be_bytes());
        sof.extend_from_slice(&width.to_be_bytes());
        sof.extend_from_slice(&[1, 1, 0x11, 0]);
        segment(&mut out, marker::SOF0, &sof);

        for (class, bits, values) in [
            (0x00u8, &STD_DC_LUMA_BITS, &STD_DC_LUMA_VALUES[..]),
            (0x10u8, &STD_AC_LUMA_BITS, &STD_AC_LUMA_VALUES[..]),
        ] {
            let mut dht = vec![class];
            dht.extend_from_slice(bits);
            dht.extend_from_slice(values);
            segment(&mut out, marker::DHT, &dht);
        }

        if self.restart_interval > 0 {
            segment(&mut out, marker::DRI, &self.restart_interval.to_be_bytes());
        }
        segment(&mut out, marker::SOS, &[1, 1, 0x00, 0, 63, 0]);

        let mut w = BitWriter::new(out);
        let mut pred = 0i32;
        let interval = self.restart_interval as usize;
        for (i, block) in grid.blocks().iter().enumerate() {
            if interval > 0 && i > 0 && i % interval == 0 {
                w.flush();
                w.out
                    .extend_from_slice(&[0xFF, marker::RST0 + ((i / interval - 1) % 8) as u8]);
                pred = 0;
            }
            let diff = block[0] - pred;
            pred = block[0];
            let s = category(diff);
            if s > 11 {
                return Err(EncodeError::CoefficientRange(block[0]));
            }
            let (code, len) = dc_table.code(s);
            w.put(code as u32, len);
            if s > 0 {
                w.put(magnitude_bits(diff, s), s);
            }

            let mut run = 0u8;
            for &v in &block[1..] {
                if v == 0 {
                    run += 1;
                    continue;
                }
                while run >= 16 {
                    let (code, len) = ac_table.code(0xF0);
                    w.put(code as u32, len);
                    run -= 16;
                }
                let s = category(v);
                if s > 10 {
                    return Err(EncodeError::CoefficientRange(v));
                }
                let (code, len) = ac_table.code((run << 4) | s);
                w.put(code as u32, len);
                w.put(magnitude_bits(v, s), s);
                run = 0;
            }
            if run > 0 {
                let (code, len) = ac_table.code(0x00);
                w.put(code as u32, len);
            }
        }
        let mut out = w.into_inner();
        out.extend_from_slice(&[0xFF, marker::EOI]);
        Ok(out)
    }
}

/// Low `s` bits of `v`, or of `v - 1` for negative values.
#[inline]
fn magnitude_bits(v: i32, s: u8) -> u32 {
    let bits = if v < 0 { v - 1 } else { v };
    (bits as u32) & ((1u32 << s) - 1)
}

/// Baseline grayscale JPEG of `img` quantized with `table`.
pub fn encode_baseline_gray(img: &GrayImage, table: &QuantTable) -> Result<Vec<u8>, EncodeError> {
    Encoder::new().encode(img, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use proptest::prelude::*;

    /// Per-block DC differences in raster order.
    fn dc_differences(grid: &CoeffGrid) -> Vec<i32> {
        let mut pred = 0;
        grid.coefficient(0)
            .map(|dc| {
                let d = dc - pred;
                pred = dc;
                d
            })
            .collect()
    }

    #[test]
    fn categories() {
        assert_eq!(category(0), 0);
        assert_eq!(category(1), 1);
        assert_eq!(category(-1), 1);
        assert_eq!(category(-3), 2);
        assert_eq!(category(1023), 10);
        assert_eq!(category(-2047), 11);
        assert_eq!(magnitude_bits(-1, 1), 0);
        assert_eq!(magnitude_bits(-3, 2), 0b00);
        assert_eq!(magnitude_bits(-2, 2), 0b01);
        assert_eq!(magnitude_bits(5, 3), 0b101);
    }

    #[test]
    fn byte_stuffing() {
        let mut w = BitWriter::new(Vec::new());
        w.put(0xFF, 8);
        w.put(0b1, 1);
        assert_eq!(w.into_inner(), vec![0xFF, 0x00, 0xFF, 0x00]);
    }

    #[test]
    fn dqt_is_zigzag_and_sof_is_8_bit() {
        let table = crate::quant::standard_table(50).unwrap();
        let img = synth::patch(1, 16);
        let bytes = encode_baseline_gray(&img, &table).unwrap();
        let dqt = bytes
            .windows(2)
            .position(|w| w == [0xFF, marker::DQT])
            .unwrap();
        assert_eq!(&bytes[dqt + 5..dqt + 69], &table.zigzag());
        let sof = bytes
            .windows(2)
            .position(|w| w == [0xFF, marker::SOF0])
            .unwrap();
        assert_eq!(bytes[sof + 4], 8);
    }

    proptest! {
        #[test]
        fn dc_differences_sum_to_last_dc(dcs in prop::collection::vec(-1024i32..=1024, 1..40)) {
            let blocks: Vec<[i32; 64]> = dcs.iter().map(|&d| { let mut b = [0; 64]; b[0] = d; b }).collect();
            let grid = CoeffGrid::new(blocks.len(), 1, blocks);
            let diffs = dc_differences(&grid);
            prop_assert_eq!(diffs.iter().sum::<i32>(), *dcs.last().unwrap());
        }
    }
}
