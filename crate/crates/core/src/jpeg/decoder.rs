//! Baseline JPEG parser that recovers quantization tables and quantized
//! coefficients straight from the entropy-coded data.
//!
//! No inverse DCT runs here: every coefficient is the integer stored in the
//! file, with only the DC prediction undone.

use std::collections::BTreeMap;

use super::huffman::DecodeTable;
use super::{marker, JpegError};
use crate::grid::CoeffGrid;
use crate::image::GrayImage;
use crate::quant::QuantTable;
use crate::sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub id: u8,
    pub h: u8,
    pub v: u8,
    pub tq: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInfo {
    pub sof_marker: u8,
    pub precision: u8,
    pub width: u16,
    pub height: u16,
    pub components: Vec<Component>,
    pub restart_interval: u16,
}

impl FrameInfo {
    fn max_sampling(&self) -> (usize, usize) {
        let h = self.components.iter().map(|c| c.h).max().unwrap_or(1) as usize;
        let v = self.components.iter().map(|c| c.v).max().unwrap_or(1) as usize;
        (h, v)
    }

    /// Blocks covered by a single-component scan of `c`.
    fn component_blocks(&self, c: &Component) -> (usize, usize) {
        let (hmax, vmax) = self.max_sampling();
        let cw = (self.width as usize * c.h as usize).div_ceil(hmax);
        let ch = (self.height as usize * c.v as usize).div_ceil(vmax);
        (cw.div_ceil(8), ch.div_ceil(8))
    }

    fn mcus(&self) -> (usize, usize) {
        let (hmax, vmax) = self.max_sampling();
        (
            (self.width as usize).div_ceil(8 * hmax),
            (self.height as usize).div_ceil(8 * vmax),
        )
    }
}

/// Everything recovered from one file.
#[derive(Debug, Clone)]
pub struct ParsedJpeg {
    pub frame: FrameInfo,
    /// Quantization table used by each component, keyed by component id.
    pub tables: BTreeMap<u8, QuantTable>,
    /// Coefficients of the first frame component (luminance).
    pub luminance: CoeffGrid,
}

impl ParsedJpeg {
    pub fn luminance_id(&self) -> u8 {
        self.frame.components[0].id
    }

    pub fn luminance_table(&self) -> &QuantTable {
        &self.tables[&self.luminance_id()]
    }

    /// Reference pixel decode of the luminance plane, cropped to the frame size.
    pub fn luminance_pixels(&self) -> GrayImage {
        let full = sim::reconstruct(&self.luminance, self.luminance_table());
        let w = (self.frame.width as usize).min(full.width());
        let h = (self.frame.height as usize).min(full.height());
        full.sub_image(0, 0, w, h)
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    nbits: u32,
    at_marker: bool,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        BitReader {
            data,
            pos: 0,
            acc: 0,
            nbits: 0,
            at_marker: false,
        }
    }

    fn fill(&mut self) {
        while self.nbits <= 56 && !self.at_marker && self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b != 0xFF {
                self.acc = (self.acc << 8) | b as u64;
                self.nbits += 8;
                self.pos += 1;
                continue;
            }
            match self.data.get(self.pos + 1) {
                Some(0x00) => {
                    self.acc = (self.acc << 8) | 0xFF;
                    self.nbits += 8;
                    self.pos += 2;
                }
                // Fill byte preceding a marker.
                Some(0xFF) => self.pos += 1,
                Some(_) => self.at_marker = true,
                None => self.pos = self.data.len(),
            }
        }
    }

    #[inline]
    fn bit(&mut self) -> Result<u32, JpegError> {
        if self.nbits == 0 {
            self.fill();
            if self.nbits == 0 {
                return Err(JpegError::TruncatedScan);
            }
        }
        self.nbits -= 1;
        Ok(((self.acc >> self.nbits) & 1) as u32)
    }

    fn bits(&mut self, n: u8) -> Result<u32, JpegError> {
        if self.nbits < n as u32 {
            self.fill();
            if self.nbits < n as u32 {
                return Err(JpegError::TruncatedScan);
            }
        }
        self.nbits -= n as u32;
        Ok(((self.acc >> self.nbits) & ((1u64 << n) - 1)) as u32)
    }

    /// Offset of the next marker that is not a stuffed byte, or the end of data.
    fn seek_marker(&mut self) -> usize {
        if self.at_marker {
            return self.pos;
        }
        let mut p = self.pos;
        while p + 1 < self.data.len() {
            if self.data[p] == 0xFF && self.data[p + 1] != 0x00 && self.data[p + 1] != 0xFF {
                return p;
            }
            p += 1;
        }
        self.data.len()
    }

    fn restart(&mut self, expected: u8) -> Result<(), JpegError> {
        self.acc = 0;
        self.nbits = 0;
        let p = self.seek_marker();
        match self.data.get(p + 1) {
            Some(&m) if m == marker::RST0 + expected => {
                self.pos = p + 2;
                self.at_marker = false;
                Ok(())
            }
            Some(&m) => Err(JpegError::BadRestartMarker {
                expected: marker::RST0 + expected,
                found: m,
            }),
            None => Err(JpegError::TruncatedScan),
        }
    }
}

/// Sign extension of a `s`-bit magnitude.
#[inline]
fn extend(v: u32, s: u8) -> i32 {
    if s == 0 {
        0
    } else if v < (1 << (s - 1)) {
        v as i32 - (1 << s) + 1
    } else {
        v as i32
    }
}

fn decode_block(
    r: &mut BitReader<'_>,
    dc: &DecodeTable,
    ac: &DecodeTable,
    pred: &mut i32,
    out: &mut [i32; 64],
) -> Result<(), JpegError> {
    let s = dc.decode(|| r.bit())?;
    if s > 11 {
        return Err(JpegError::Malformed("dc magnitude category"));
    }
    let diff = extend(r.bits(s)?, s);
    *pred += diff;
    out[0] = *pred;
    let mut k = 1usize;
    while k < 64 {
        let rs = ac.decode(|| r.bit())?;
        let (run, size) = (rs >> 4, rs & 0x0F);
        if size == 0 {
            if run == 15 {
                k += 16;
                continue;
            }
            break;
        }
        k += run as usize;
        if k > 63 {
            return Err(JpegError::Malformed("ac run past end of block"));
        }
        out[k] = extend(r.bits(size)?, size);
        k += 1;
    }
    if k > 64 {
        return Err(JpegError::Malformed("ac run past end of block"));
    }
    Ok(())
}

struct ScanComponent {
    index: usize,
    dc: usize,
    ac: usize,
}

struct Plane {
    grid: CoeffGrid,
    coded: (usize, usize),
    decoded: bool,
}

struct Parser<'a> {
    data: &'a [u8],
    pos: usize,
    quant: [Option<QuantTable>; 4],
    dc: [Option<DecodeTable>; 4],
    ac: [Option<DecodeTable>; 4],
    frame: Option<FrameInfo>,
    restart_interval: u16,
    planes: Vec<Plane>,
    component_tables: Vec<Option<QuantTable>>,
}

impl<'a> Parser<'a> {
    fn u8(&mut self) -> Result<u8, JpegError> {
        let b = *self.data.get(self.pos).ok_or(JpegError::UnexpectedEof)?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, JpegError> {
        Ok(u16::from_be_bytes([self.u8()?, self.u8()?]))
    }

    /// Payload of a length-prefixed segment; advances past it.
    fn segment(&mut self) -> Result<&'a [u8], JpegError> {
        let len = self.u16()? as usize;
        if len < 2 {
            return Err(JpegError::Malformed("segment length"));
        }
        let end = self.pos + len - 2;
        let payload = self
            .data
            .get(self.pos..end)
            .ok_or(JpegError::UnexpectedEof)?;
        self.pos = end;
        Ok(payload)
    }

    fn next_marker(&mut self) -> Result<Option<u8>, JpegError> {
        if self.pos >= self.data.len() {
            return Ok(None);
        }
        if self.u8()? != 0xFF {
            return Err(JpegError::Malformed("expected marker"));
        }
        let mut m = self.u8()?;
        while m == 0xFF {
            m = self.u8()?;
        }
        Ok(Some(m))
    }

    fn parse_dqt(&mut self) -> Result<(), JpegError> {
        let mut p = self.segment()?;
        while !p.is_empty() {
            let (pq, tq) = (p[0] >> 4, (p[0] & 0x0F) as usize);
            if tq > 3 {
                return Err(JpegError::Malformed("quantization table id"));
            }
            let n = match pq {
                0 => 64,
                1 => 128,
                _ => return Err(JpegError::Malformed("quantization table precision")),
            };
            let body = p.get(1..1 + n).ok_or(JpegError::Malformed("short DQT"))?;
            let zz: Vec<u32> = if pq == 0 {
                body.iter().map(|&b| b as u32).collect()
            } else {
                body.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                    .collect()
            };
            self.quant[tq] = Some(QuantTable::from_zigzag(&zz)?);
            p = &p[1 + n..];
        }
        Ok(())
    }

    fn parse_dht(&mut self) -> Result<(), JpegError> {
        let mut p = self.segment()?;
        while !p.is_empty() {
            if p.len() < 17 {
                return Err(JpegError::Malformed("short DHT"));
            }
            let (class, id) = (p[0] >> 4, (p[0] & 0x0F) as usize);
            if class > 1 || id > 3 {
                return Err(JpegError::Malformed("huffman table class/id"));
            }
            let mut bits = [0u8; 16];
            bits.copy_from_slice(&p[1..17]);
            let n: usize = bits.iter().map(|&b| b as usize).sum();
            let values = p.get(17..17 + n).ok_or(JpegError::Malformed("short DHT"))?;
            let table = DecodeTable::new(&bits, values)?;
            if class == 0 {
                self.dc[id] = Some(table);
            } else {
                self.ac[id] = Some(table);
            }
            p = &p[17 + n..];
        }
        Ok(())
    }

    fn parse_frame(&mut self, sof: u8) -> Result<(), JpegError> {
        if self.frame.is_some() {
            return Err(JpegError::Malformed("multiple frames"));
        }
        let p = self.segment()?;
        if p.len() < 6 {
            return Err(JpegError::Malformed("short SOF"));
        }
        let precision = p[0];
        if precision != 8 {
            return Err(JpegError::Unsupported(format!(
                "{precision}-bit sample precision"
            )));
        }
        let height = u16::from_be_bytes([p[1], p[2]]);
        let width = u16::from_be_bytes([p[3], p[4]]);
        if height == 0 {
            return Err(JpegError::Unsupported("height defined by DNL".into()));
        }
        if width == 0 {
            return Err(JpegError::Malformed("zero width"));
        }
        let nf = p[5] as usize;
        if nf == 0 || nf > 4 || p.len() != 6 + 3 * nf {
            return Err(JpegError::Malformed("frame component count"));
        }
        let mut components = Vec::with_capacity(nf);
        for c in p[6..].chunks_exact(3) {
            let (h, v, tq) = (c[1] >> 4, c[1] & 0x0F, c[2]);
            if !(1..=4).contains(&h) || !(1..=4).contains(&v) || tq > 3 {
                return Err(JpegError::Malformed("frame component parameters"));
            }
            components.push(Component { id: c[0], h, v, tq });
        }
        let frame = FrameInfo {
            sof_marker: sof,
            precision,
            width,
            height,
            components,
            restart_interval: self.restart_interval,
        };
        let (mx, my) = frame.mcus();
        self.planes = frame
            .components
            .iter()
            .map(|c| Plane {
                grid: CoeffGrid::zeroed(mx * c.h as usize, my * c.v as usize),
                coded: (0, 0),
                decoded: false,
            })
            .collect();
        self.component_tables = vec![None; frame.components.len()];
        self.frame = Some(frame);
        Ok(())
    }

    fn parse_scan(&mut self) -> Result<(), JpegError> {
        let frame = self.frame.clone().ok_or(JpegError::ScanBeforeFrame)?;
        let p = self.segment()?;
        let ns = *p.first().ok_or(JpegError::Malformed("short SOS"))? as usize;
        if ns == 0 || ns > 4 || p.len() != 4 + 2 * ns {
            return Err(JpegError::Malformed("scan component count"));
        }
        let mut comps = Vec::with_capacity(ns);
        for c in p[1..1 + 2 * ns].chunks_exact(2) {
            let index = frame
                .components
                .iter()
                .position(|fc| fc.id == c[0])
                .ok_or(JpegError::Malformed("scan references unknown component"))?;
            let (dc, ac) = ((c[1] >> 4) as usize, (c[1] & 0x0F) as usize);
            if dc > 3 || self.dc[dc].is_none() {
                return Err(JpegError::MissingHuffmanTable {
                    class: "DC",
                    id: dc as u8,
                });
            }
            if ac > 3 || self.ac[ac].is_none() {
                return Err(JpegError::MissingHuffmanTable {
                    class: "AC",
                    id: ac as u8,
                });
            }
            let tq = frame.components[index].tq;
            let table = self.quant[tq as usize].ok_or(JpegError::MissingQuantTable(tq))?;
            self.component_tables[index].get_or_insert(table);
            comps.push(ScanComponent { index, dc, ac });
        }
        let (ss, se, ahal) = (p[1 + 2 * ns], p[2 + 2 * ns], p[3 + 2 * ns]);
        if ss != 0 || se != 63 || ahal != 0 {
            return Err(JpegError::Unsupported(
                "spectral selection or successive approximation".into(),
            ));
        }

        let units: Vec<(usize, usize, usize)>; // per MCU: (plane, bx, by) offsets
        let (mcus_x, mcus_y);
        if ns == 1 {
            let c = &frame.components[comps[0].index];
            let (bw, bh) = frame.component_blocks(c);
            mcus_x = bw;
            mcus_y = bh;
            units = vec![(0, 0, 0)];
            let plane = &mut self.planes[comps[0].index];
            plane.coded = (bw, bh);
        } else {
            let (mx, my) = frame.mcus();
            mcus_x = mx;
            mcus_y = my;
            let mut u = Vec::new();
            for (si, sc) in comps.iter().enumerate() {
                let c = &frame.components[sc.index];
                for v in 0..c.v as usize {
                    for h in 0..c.h as usize {
                        u.push((si, h, v));
                    }
                }
                let plane = &mut self.planes[sc.index];
                plane.coded = (mx * c.h as usize, my * c.v as usize);
            }
            if u.len() > 10 {
                return Err(JpegError::Malformed("more than 10 blocks per MCU"));
            }
            units = u;
        }

        let mut reader = BitReader::new(&self.data[self.pos..]);
        let mut preds = [0i32; 4];
        let interval = self.restart_interval as usize;
        let mut restarts = 0u8;
        for m in 0..mcus_x * mcus_y {
            if interval > 0 && m > 0 && m % interval == 0 {
                reader.restart(restarts)?;
                restarts = (restarts + 1) % 8;
                preds = [0; 4];
            }
            let (mx, my) = (m % mcus_x, m / mcus_x);
            for &(si, h, v) in &units {
                let sc = &comps[si];
                let (bx, by) = if ns == 1 {
                    (mx, my)
                } else {
                    let c = &frame.components[sc.index];
                    (mx * c.h as usize + h, my * c.v as usize + v)
                };
                let plane = &mut self.planes[sc.index];
                let wb = plane.grid.width_blocks();
                let block = &mut plane.grid.blocks_mut()[by * wb + bx];
                decode_block(
                    &mut reader,
                    self.dc[sc.dc].as_ref().expect("checked"),
                    self.ac[sc.ac].as_ref().expect("checked"),
                    &mut preds[si],
                    block,
                )?;
            }
        }
        for sc in &comps {
            self.planes[sc.index].decoded = true;
        }
        self.pos += reader.seek_marker();
        Ok(())
    }

    fn run(mut self) -> Result<ParsedJpeg, JpegError> {
        if self.data.len() < 2 || self.data[0] != 0xFF || self.data[1] != marker::SOI {
            return Err(JpegError::NotJpeg);
        }
        self.pos = 2;
        while let Some(m) = self.next_marker()? {
            match m {
                marker::EOI => break,
                marker::SOF0 | marker::SOF1 => self.parse_frame(m)?,
                m if marker::unsupported_frame(m).is_some() => {
                    return Err(JpegError::Unsupported(
                        marker::unsupported_frame(m).expect("matched").into(),
                    ))
                }
                marker::DHT => self.parse_dht()?,
                marker::DQT => self.parse_dqt()?,
                marker::DAC => return Err(JpegError::Unsupported("arithmetic coding".into())),
                marker::DNL => return Err(JpegError::Unsupported("DNL marker".into())),
                marker::DRI => {
                    let p = self.segment()?;
                    if p.len() != 2 {
                        return Err(JpegError::Malformed("DRI length"));
                    }
                    self.restart_interval = u16::from_be_bytes([p[0], p[1]]);
                }
                marker::SOS => self.parse_scan()?,
                marker::SOI => return Err(JpegError::Malformed("nested SOI")),
                marker::TEM | marker::RST0..=marker::RST7 => {}
                _ => {
                    self.segment()?;
                }
            }
        }
        let mut frame = self.frame.ok_or(JpegError::NoFrame)?;
        let lum = self.planes.swap_remove(0);
        if !lum.decoded {
            return Err(JpegError::NoLuminanceScan);
        }
        frame.restart_interval = self.restart_interval;
        let (cw, ch) = lum.coded;
        let wb = lum.grid.width_blocks();
        let luminance = if (cw, ch) == (wb, lum.grid.height_blocks()) {
            lum.grid
        } else {
            let blocks = (0..ch)
                .flat_map(|by| (0..cw).map(move |bx| (bx, by)))
                .map(|(bx, by)| *lum.grid.block(bx, by))
                .collect();
            CoeffGrid::new(cw, ch, blocks)
        };
        let mut tables = BTreeMap::new();
        for (i, c) in frame.components.iter().enumerate() {
            if let Some(t) = self.component_tables[i].or(self.quant[c.tq as usize]) {
                tables.insert(c.id, t);
            }
        }
        Ok(ParsedJpeg {
            frame,
            tables,
            luminance,
        })
    }
}

/// Parses a baseline sequential JPEG.
pub fn parse_jpeg(bytes: &[u8]) -> Result<ParsedJpeg, JpegError> {
    Parser {
        data: bytes,
        pos: 0,
        quant: [None; 4],
        dc: Default::default(),
        ac: Default::default(),
        frame: None,
        restart_interval: 0,
        planes: Vec::new(),
        component_tables: Vec::new(),
    }
    .run()
}
