//! Deterministic synthetic grayscale images for fixtures and corpora.
//!
//! Images follow a dead-leaves model: occluding shaded discs and rectangles with
//! power-law sizes over a smooth background, plus optional texture, sensor noise
//! and optical blur. This reproduces the heavy-tailed, roughly Laplacian DCT
//! statistics of camera images closely enough to exercise the estimator when no
//! raw photo collection is at hand.

use crate::image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

struct Shape {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    rect: bool,
    level: f64,
    gx: f64,
    gy: f64,
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        let dx = (x - self.cx) / self.rx;
        let dy = (y - self.cy) / self.ry;
        if self.rect {
            dx.abs() <= 1.0 && dy.abs() <= 1.0
        } else {
            dx * dx + dy * dy <= 1.0
        }
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        self.level + self.gx * (x - self.cx) + self.gy * (y - self.cy)
    }
}

/// A `width`x`height` synthetic image fully determined by `seed`.
pub fn image(seed: u64, width: usize, height: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F0E1_u64.rotate_left(17));
    let scale = width.max(height) as f64;

    // Contrast regime: a minority of images are nearly flat, as in sky or wall crops.
    let contrast: f64 = match rng.gen_range(0..10) {
        0 => rng.gen_range(2.0..10.0),
        1 | 2 => rng.gen_range(10.0..35.0),
        _ => rng.gen_range(35.0..110.0),
    };
    let mean: f64 = rng.gen_range(50.0..205.0);

    let bg_gx = gaussian(&mut rng) * contrast / scale;
    let bg_gy = gaussian(&mut rng) * contrast / scale;
    let wave_amp = rng.gen_range(0.0..0.4) * contrast;
    let wave_fx = rng.gen_range(0.5..3.0) / scale * std::f64::consts::TAU;
    let wave_fy = rng.gen_range(0.5..3.0) / scale * std::f64::consts::TAU;
    let wave_phase = rng.gen_range(0.0..std::f64::consts::TAU);

    let n_shapes = rng.gen_range(0..80usize);
    let r_min = 0.015 * scale;
    let r_max = 0.6 * scale;
    let mut shapes = Vec::with_capacity(n_shapes);
    for _ in 0..n_shapes {
        // Inverse-CDF sampling of p(r) ~ r^-3 on [r_min, r_max].
        let u: f64 = rng.gen();
        let inv2 = 1.0 / (r_min * r_min) - u * (1.0 / (r_min * r_min) - 1.0 / (r_max * r_max));
        let r = 1.0 / inv2.sqrt();
        let aspect: f64 = rng.gen_range(0.4..2.5);
        shapes.push(Shape {
            cx: rng.gen_range(-0.1..1.1) * width as f64,
            cy: rng.gen_range(-0.1..1.1) * height as f64,
            rx: r * aspect.sqrt(),
            ry: r / aspect.sqrt(),
            rect: rng.gen_bool(0.35),
            level: mean + gaussian(&mut rng) * contrast * 0.6,
            gx: gaussian(&mut rng) * contrast * 0.3 / scale,
            gy: gaussian(&mut rng) * contrast * 0.3 / scale,
        });
    }

    let texture_amp = if rng.gen_bool(0.4) {
        rng.gen_range(0.0..0.15) * contrast
    } else {
        0.0
    };
    let tex_f1 = rng.gen_range(0.3..1.4);
    let tex_f2 = rng.gen_range(0.3..1.4);
    let tex_theta = rng.gen_range(0.0..std::f64::consts::PI);
    let noise_sigma: f64 = rng.gen_range(0.3..4.0);
    let blur = rng.gen_bool(0.6);

    let mut canvas = vec![0.0f64; width * height];
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            // Painter's order: the last shape covering the pixel is on top.
            let mut v = match shapes.iter().rev().find(|s| s.contains(fx, fy)) {
                Some(s) => s.value(fx, fy),
                None => {
                    mean + bg_gx * (fx - width as f64 / 2.0)
                        + bg_gy * (fy - height as f64 / 2.0)
                        + wave_amp * (wave_fx * fx + wave_phase).sin() * (wave_fy * fy).cos()
                }
            };
            if texture_amp > 0.0 {
                let t = fx * tex_theta.cos() + fy * tex_theta.sin();
                v += texture_amp * ((tex_f1 * t).sin() + 0.5 * (tex_f2 * (fx - fy)).sin());
            }
            canvas[y * width + x] = v;
        }
    }

    if blur {
        canvas = box_blur(&canvas, width, height);
    }
    let pixels = canvas
        .into_iter()
        .map(|v| {
            (v + noise_sigma * gaussian(&mut rng))
                .round()
                .clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(width, height, pixels).expect("positive dimensions")
}

fn box_blur(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            let mut n = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (sx, sy) = (x as i64 + dx, y as i64 + dy);
                    if sx >= 0 && sy >= 0 && (sx as usize) < width && (sy as usize) < height {
                        acc += src[sy as usize * width + sx as usize];
                        n += 1.0;
                    }
                }
            }
            out[y * width + x] = acc / n;
        }
    }
    out
}

/// Square synthetic patch.
pub fn patch(seed: u64, side: usize) -> GrayImage {
    image(seed, side, side)
}
