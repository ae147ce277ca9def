//! DCT-domain simulation of single and aligned double JPEG compression.

use crate::dct::{dequantize, fdct_block, idct_block, quantize, FreqBlock, PixelBlock};
use crate::grid::CoeffGrid;
use crate::image::GrayImage;
use crate::quant::QuantTable;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("image dimensions {width}x{height} are not multiples of 8")]
    NotBlockAligned { width: usize, height: usize },
}

fn check_aligned(img: &GrayImage) -> Result<(), SimError> {
    if img.width() % 8 != 0 || img.height() % 8 != 0 {
        return Err(SimError::NotBlockAligned {
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

/// Splits a block-aligned image into raster-ordered 8x8 blocks.
pub fn image_blocks(img: &GrayImage) -> Result<Vec<PixelBlock>, SimError> {
    check_aligned(img)?;
    let (bw, bh) = (img.width() / 8, img.height() / 8);
    let mut out = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let mut b = [0u8; 64];
            for y in 0..8 {
                let start = (by * 8 + y) * img.width() + bx * 8;
                b[y * 8..y * 8 + 8].copy_from_slice(&img.pixels()[start..start + 8]);
            }
            out.push(b);
        }
    }
    Ok(out)
}

pub(crate) fn assemble(
    width_blocks: usize,
    height_blocks: usize,
    blocks: &[PixelBlock],
) -> GrayImage {
    let width = width_blocks * 8;
    let mut pixels = vec![0u8; width * height_blocks * 8];
    for (i, b) in blocks.iter().enumerate() {
        let (bx, by) = (i % width_blocks, i / width_blocks);
        for y in 0..8 {
            let start = (by * 8 + y) * width + bx * 8;
            pixels[start..start + 8].copy_from_slice(&b[y * 8..y * 8 + 8]);
        }
    }
    GrayImage::new(width, height_blocks * 8, pixels).expect("non-empty grid")
}

/// Forward DCT of every block of a block-aligned image.
pub fn forward_blocks(img: &GrayImage) -> Result<Vec<FreqBlock>, SimError> {
    Ok(image_blocks(img)?.iter().map(fdct_block).collect())
}

/// Quantizes an already-aligned image. Shared by the simulator and the JPEG encoder.
pub fn quantize_image(img: &GrayImage, table: &QuantTable) -> Result<CoeffGrid, SimError> {
    let blocks = forward_blocks(img)?
        .iter()
        .map(|f| quantize(f, table))
        .collect();
    Ok(CoeffGrid::new(img.width() / 8, img.height() / 8, blocks))
}

/// Pixel reconstruction of a quantized grid: dequantize, inverse DCT, round and clamp.
pub fn reconstruct(grid: &CoeffGrid, table: &QuantTable) -> GrayImage {
    let blocks: Vec<PixelBlock> = grid
        .blocks()
        .iter()
        .map(|q| idct_block(&dequantize(q, table)))
        .collect();
    assemble(grid.width_blocks(), grid.height_blocks(), &blocks)
}

/// One JPEG compression: the quantized grid and the decoded pixels.
pub fn compress_once(
    img: &GrayImage,
    table: &QuantTable,
) -> Result<(CoeffGrid, GrayImage), SimError> {
    let grid = quantize_image(img, table)?;
    let recon = reconstruct(&grid, table);
    Ok((grid, recon))
}

/// Grid of the second compression with `q2` after a first compression with `q1`.
pub fn double_compress(
    img: &GrayImage,
    q1: &QuantTable,
    q2: &QuantTable,
) -> Result<CoeffGrid, SimError> {
    let (_, recon) = compress_once(img, q1)?;
    quantize_image(&recon, q2)
}
