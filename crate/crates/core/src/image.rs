//! 8-bit grayscale images and binary PGM input.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    ZeroSized { width: usize, height: usize },
    #[error("pixel buffer has {got} samples, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("crop of {side}x{side} at ({x}, {y}) does not fit in {width}x{height}")]
    CropOutOfBounds {
        x: usize,
        y: usize,
        side: usize,
        width: usize,
        height: usize,
    },
    #[error("not a binary PGM file (expected magic P5)")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(&'static str),
    #[error("PGM pixel data truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroSized { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImageError::BufferSize {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// The `side`x`side` sub-image whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, side: usize) -> Result<GrayImage, ImageError> {
        if side == 0 || x + side > self.width || y + side > self.height {
            return Err(ImageError::CropOutOfBounds {
                x,
                y,
                side,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.sub_image(x, y, side, side))
    }

    /// Panics unless the rectangle is non-empty and lies inside the image.
    pub(crate) fn sub_image(&self, x: usize, y: usize, w: usize, h: usize) -> GrayImage {
        assert!(w > 0 && h > 0 && x + w <= self.width && y + h <= self.height);
        let mut pixels = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            pixels.extend_from_slice(&self.pixels[start..start + w]);
        }
        GrayImage {
            width: w,
            height: h,
            pixels,
        }
    }

    /// Centered crop; an odd remainder leaves the extra pixel at the right/bottom.
    pub fn crop_center(&self, side: usize) -> Result<GrayImage, ImageError> {
        let x = self.width.saturating_sub(side) / 2;
        let y = self.height.saturating_sub(side) / 2;
        self.crop(x, y, side)
    }

    /// Pads to whole 8x8 blocks by replicating the last column and row.
    pub fn pad_to_blocks(&self) -> GrayImage {
        let w = self.width.div_ceil(8) * 8;
        let h = self.height.div_ceil(8) * 8;
        if w == self.width && h == self.height {
            return self.clone();
        }
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            let sy = y.min(self.height - 1);
            let row = &self.pixels[sy * self.width..(sy + 1) * self.width];
            pixels.extend_from_slice(row);
            pixels.extend(std::iter::repeat(row[self.width - 1]).take(w - self.width));
        }
        GrayImage {
            width: w,
            height: h,
            pixels,
        }
    }

    /// Serializes as binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

pub fn crop_center(img: &GrayImage, side: usize) -> Result<GrayImage, ImageError> {
    img.crop_center(side)
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<usize, ImageError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::BadHeader(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(ImageError::BadHeader(what))
    }
}

/// Parses a binary PGM. 16-bit samples keep their high byte.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(ImageError::BadMagic);
    }
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval = r.number("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(ImageError::BadHeader("maxval"));
    }
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroSized { width, height });
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(r.pos) {
        Some(b) if b.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(ImageError::BadHeader("missing raster separator")),
    }
    let sample_bytes = if maxval > 255 { 2 } else { 1 };
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(sample_bytes))
        .ok_or(ImageError::BadHeader("dimensions overflow"))?;
    let data = &bytes[r.pos..];
    if data.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            got: data.len(),
        });
    }
    let pixels = if sample_bytes == 1 {
        data[..expected].to_vec()
    } else {
        data[..expected].chunks_exact(2).map(|s| s[0]).collect()
    };
    GrayImage::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::new(w, h, (0..w * h).map(|i| (i % 251) as u8).collect()).unwrap()
    }

    #[test]
    fn pgm_basic() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 64, 128, 255]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 64, 128, 255]);
    }

    #[test]
    fn pgm_sixteen_bit_takes_high_byte() {
        let mut bytes = b"P5\n# comment\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0xFF, 0x00]);
        assert_eq!(read_pgm(&bytes).unwrap().pixels(), &[255]);
    }

    #[test]
    fn pgm_errors() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert!(matches!(
            read_pgm(&bytes),
            Err(ImageError::Truncated {
                expected: 4,
                got: 3
            })
        ));
        assert_eq!(read_pgm(b"P2 1 1 255\n0"), Err(ImageError::BadMagic));
        assert!(matches!(
            read_pgm(b"P5 x 1 255\n0"),
            Err(ImageError::BadHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P5 1 1 0\n0"),
            Err(ImageError::BadHeader(_))
        ));
    }

    #[test]
    fn pgm_round_trip() {
        let img = ramp(13, 7);
        assert_eq!(read_pgm(&img.to_pgm()).unwrap(), img);
    }

    #[test]
    fn center_crop_offsets() {
        let img = ramp(100, 100);
        let c = img.crop_center(64).unwrap();
        assert_eq!(c.get(0, 0), img.get(18, 18));
        assert_eq!(c.get(63, 63), img.get(81, 81));
        assert_eq!(img.crop_center(100).unwrap(), img);
        assert!(img.crop_center(101).is_err());
    }

    #[test]
    fn center_crop_odd_remainder_exhaustive() {
        for w in 1..12 {
            for h in 1..12 {
                let img = ramp(w, h);
                for side in 1..=w.min(h) {
                    let c = img.crop_center(side).unwrap();
                    // Find the offset by search and check the left/top margin never exceeds the right/bottom one.
                    let (x, y) = (0..=w - side)
                        .flat_map(|x| (0..=h - side).map(move |y| (x, y)))
                        .find(|&(x, y)| img.crop(x, y, side).unwrap() == c)
                        .unwrap();
                    let (right, bottom) = (w - side - x, h - side - y);
                    assert!(x <= right && right - x <= 1, "w={w} side={side} x={x}");
                    assert!(y <= bottom && bottom - y <= 1);
                }
            }
        }
        assert_eq!(
            ramp(65, 65).crop_center(64).unwrap(),
            ramp(65, 65).crop(0, 0, 64).unwrap()
        );
    }

    #[test]
    fn padding_replicates_edges() {
        let img = ramp(10, 9);
        let p = img.pad_to_blocks();
        assert_eq!((p.width(), p.height()), (16, 16));
        assert_eq!(p.get(15, 0), img.get(9, 0));
        assert_eq!(p.get(3, 15), img.get(3, 8));
        assert_eq!(p.get(15, 15), img.get(9, 8));
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(GrayImage::new(0, 4, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
    }
}
