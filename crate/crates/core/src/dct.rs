//! 8x8 type-II DCT with JPEG normalization, quantization and dequantization.
//!
//! Frequency blocks are row-major: index `8 * v + u` holds vertical frequency
//! `v` and horizontal frequency `u`. Quantized values are always exchanged in
//! zig-zag order, matching how they are stored in a JPEG bitstream.

use crate::quant::{QuantTable, ZIGZAG_TO_NATURAL};
use std::sync::OnceLock;

pub type PixelBlock = [u8; 64];
pub type FreqBlock = [f64; 64];
/// 64 quantized coefficients in zig-zag order.
pub type QuantBlock = [i32; 64];

/// `basis[u][x] = c(u)/2 * cos((2x + 1) u pi / 16)`, with `c(0) = 1/sqrt(2)`.
fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (u, row) in m.iter_mut().enumerate() {
            let cu = if u == 0 {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                1.0
            };
            for (x, v) in row.iter_mut().enumerate() {
                let angle = ((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0;
                *v = 0.5 * cu * angle.cos();
            }
        }
        m
    })
}

/// Forward DCT of a pixel block after the 128 level shift.
pub fn fdct_block(pixels: &PixelBlock) -> FreqBlock {
    let a = basis();
    let mut shifted = [0.0f64; 64];
    for (s, &p) in shifted.iter_mut().zip(pixels.iter()) {
        *s = p as f64 - 128.0;
    }
    // Rows first: tmp[y][u] = sum_x a[u][x] * f[y][x]
    let mut tmp = [0.0f64; 64];
    for y in 0..8 {
        let row = &shifted[y * 8..y * 8 + 8];
        for u in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += a[u][x] * row[x];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += a[v][y] * tmp[y * 8 + u];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

/// Inverse DCT without level shift, rounding or clamping.
pub fn idct_block_exact(coeffs: &FreqBlock) -> FreqBlock {
    let a = basis();
    let mut tmp = [0.0f64; 64];
    for v in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += a[u][x] * coeffs[v * 8 + u];
            }
            tmp[v * 8 + x] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += a[v][y] * tmp[v * 8 + x];
            }
            out[y * 8 + x] = acc;
        }
    }
    out
}

/// Inverse DCT back to 8-bit pixels: +128, round half away from zero, clamp to `[0, 255]`.
pub fn idct_block(coeffs: &FreqBlock) -> PixelBlock {
    let spatial = idct_block_exact(coeffs);
    let mut out = [0u8; 64];
    for (o, &s) in out.iter_mut().zip(spatial.iter()) {
        *o = (s + 128.0).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// `round(coeff / q)`, half away from zero.
#[inline]
pub fn quantize_coeff(coeff: f64, q: u8) -> i32 {
    (coeff / q as f64).round() as i32
}

/// Quantizes every coefficient, emitting zig-zag order.
pub fn quantize(coeffs: &FreqBlock, table: &QuantTable) -> QuantBlock {
    let q = table.natural();
    let mut out = [0i32; 64];
    for (zz, slot) in out.iter_mut().enumerate() {
        let n = ZIGZAG_TO_NATURAL[zz];
        *slot = quantize_coeff(coeffs[n], q[n]);
    }
    out
}

/// Multiplies zig-zag values by their factors and restores natural order.
pub fn dequantize(values: &QuantBlock, table: &QuantTable) -> FreqBlock {
    let q = table.natural();
    let mut out = [0.0f64; 64];
    for (zz, &v) in values.iter().enumerate() {
        let n = ZIGZAG_TO_NATURAL[zz];
        out[n] = v as f64 * q[n] as f64;
    }
    out
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Definition-based O(64^2) transforms, independent of the separable path.

    pub fn naive_fdct(pixels: &[u8; 64]) -> [f64; 64] {
        let pi = std::f64::consts::PI;
        let c = |k: usize| if k == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        let mut out = [0.0; 64];
        for v in 0..8 {
            for u in 0..8 {
                let mut sum = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        let f = pixels[y * 8 + x] as f64 - 128.0;
                        sum += f
                            * (((2 * x + 1) * u) as f64 * pi / 16.0).cos()
                            * (((2 * y + 1) * v) as f64 * pi / 16.0).cos();
                    }
                }
                out[v * 8 + u] = 0.25 * c(u) * c(v) * sum;
            }
        }
        out
    }

    pub fn naive_idct(coeffs: &[f64; 64]) -> [f64; 64] {
        let pi = std::f64::consts::PI;
        let c = |k: usize| if k == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        let mut out = [0.0; 64];
        for y in 0..8 {
            for x in 0..8 {
                let mut sum = 0.0;
                for v in 0..8 {
                    for u in 0..8 {
                        sum += c(u)
                            * c(v)
                            * coeffs[v * 8 + u]
                            * (((2 * x + 1) * u) as f64 * pi / 16.0).cos()
                            * (((2 * y + 1) * v) as f64 * pi / 16.0).cos();
                    }
                }
                out[y * 8 + x] = 0.25 * sum;
            }
        }
        out
    }

    pub fn round_half_away(x: f64) -> i64 {
        let m = (x.abs() + 0.5).floor() as i64;
        if x < 0.0 {
            -m
        } else {
            m
        }
    }
}
