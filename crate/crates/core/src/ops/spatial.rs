use super::kernels::{gaussian_blur_plane, remap, resize_box, resize_nearest};
use super::OpContext;
use crate::error::Result;
use crate::image::Image;

/// Box-downsample by `factor` then nearest-upsample back, `[factor]`.
pub fn pixelate(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let f = p[0];
    let (w, h) = img.dimensions();
    let nw = ((w as f64 * f).round() as usize).clamp(1, w);
    let nh = ((h as f64 * f).round() as usize).clamp(1, h);
    Ok(resize_nearest(&resize_box(img, nw, nh), w, h))
}

/// Solves for the affine map taking `from[i]` to `to[i]`, returned as rows
/// `[a, b, c]` with `x' = a x + b y + c`.
fn affine_from_points(from: [[f64; 2]; 3], to: [[f64; 2]; 3]) -> [[f64; 3]; 2] {
    let [[x0, y0], [x1, y1], [x2, y2]] = from;
    let det = x0 * (y1 - y2) - y0 * (x1 - x2) + (x1 * y2 - x2 * y1);
    let inv = [
        [(y1 - y2) / det, (y2 - y0) / det, (y0 - y1) / det],
        [(x2 - x1) / det, (x0 - x2) / det, (x1 - x0) / det],
        [
            (x1 * y2 - x2 * y1) / det,
            (x2 * y0 - x0 * y2) / det,
            (x0 * y1 - x1 * y0) / det,
        ],
    ];
    let mut m = [[0.0; 3]; 2];
    for (k, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|i| inv[j][i] * to[i][k]).sum();
        }
    }
    m
}

/// Random affine jitter followed by a smooth displacement field. Parameters are
/// `[alpha, sigma, affine]` as fractions of the shorter side.
pub fn elastic(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (w, h) = img.dimensions();
    let side = w.min(h) as f64;
    let (alpha, sigma, affine) = (p[0] * side, p[1] * side, p[2] * side);

    let (cxm, cym) = (w as f64 / 2.0, h as f64 / 2.0);
    let sq = (side / 3.0).floor();
    let dst = [
        [cxm + sq, cym + sq],
        [cxm + sq, cym - sq],
        [cxm - sq, cym - sq],
    ];
    let mut src = dst;
    for pt in src.iter_mut() {
        pt[0] += cx.rng.uniform_in(-affine, affine);
        pt[1] += cx.rng.uniform_in(-affine, affine);
    }
    // Output pixel at `dst` reads the input at the perturbed `src`.
    let m = affine_from_points(dst, src);
    let warped = remap(img, |x, y| {
        let (x, y) = (x as f64, y as f64);
        (m[0][0] * x + m[0][1] * y + m[0][2], m[1][0] * x + m[1][1] * y + m[1][2])
    });

    let field = |rng: &mut crate::rng::RngStream| {
        let raw: Vec<f32> = (0..w * h).map(|_| rng.uniform_in(-1.0, 1.0) as f32).collect();
        gaussian_blur_plane(&raw, w, h, sigma)
    };
    let dx = field(&mut cx.rng);
    let dy = field(&mut cx.rng);
    let a = alpha as f32;
    Ok(remap(&warped, |x, y| {
        let i = y * w + x;
        (x as f64 + (dx[i] * a) as f64, y as f64 + (dy[i] * a) as f64)
    }))
}

/// Independent random displacement per pixel, `[max px]`.
pub fn jitter(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let amp = p[0];
    let rng = &mut cx.rng;
    Ok(remap(img, |x, y| {
        let dx = rng.uniform_in(-amp, amp);
        let dy = rng.uniform_in(-amp, amp);
        (x as f64 + dx, y as f64 + dy)
    }))
}

fn random_rect(
    cx: &mut OpContext<'_>,
    w: usize,
    h: usize,
    bw: usize,
    bh: usize,
) -> (usize, usize, usize, usize) {
    let bw = bw.clamp(1, w);
    let bh = bh.clamp(1, h);
    let x0 = cx.rng.below(w - bw + 1);
    let y0 = cx.rng.below(h - bh + 1);
    (x0, y0, bw, bh)
}

/// Opaque rectangles of random colour, `[count, size as fraction of short side]`.
pub fn color_block(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let count = p[0].round().max(0.0) as usize;
    let (w, h) = img.dimensions();
    let size = (p[1] * w.min(h) as f64).round() as usize;
    let mut out = img.clone();
    for _ in 0..count {
        let (x0, y0, bw, bh) = random_rect(cx, w, h, size, size);
        let color = [0; 3].map(|_| cx.rng.uniform() as f32);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                out.set_pixel(x, y, color);
            }
        }
    }
    Ok(out)
}

/// Copies `count` patches to nearby random locations, `[count]`.
pub fn non_eccentricity_patch(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let count = p[0].round().max(0.0) as usize;
    let (w, h) = img.dimensions();
    let size = (w.min(h) / 16).max(1);
    let reach = (size * 2) as i64;
    let mut out = img.clone();
    for _ in 0..count {
        let (sx, sy, bw, bh) = random_rect(cx, w, h, size, size);
        let ox = cx.rng.int_in(-reach, reach);
        let oy = cx.rng.int_in(-reach, reach);
        let tx = (sx as i64 + ox).clamp(0, (w - bw) as i64) as usize;
        let ty = (sy as i64 + oy).clamp(0, (h - bh) as i64) as usize;
        for y in 0..bh {
            for x in 0..bw {
                out.set_pixel(tx + x, ty + y, img.pixel(sx + x, sy + y));
            }
        }
    }
    Ok(out)
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Soft dark blobs over the frame, `[count, radius as fraction of short side, opacity]`.
pub fn lens_obstruction(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let count = p[0].round().max(0.0) as usize;
    let (w, h) = img.dimensions();
    let radius = (p[1] * w.min(h) as f64).max(1.0);
    let opacity = p[2];
    let blobs: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            let bx = cx.rng.uniform_in(0.0, w as f64);
            let by = cx.rng.uniform_in(0.0, h as f64);
            let r = radius * cx.rng.uniform_in(0.8, 1.2);
            (bx, by, r)
        })
        .collect();
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let mut m = 0.0f64;
            for &(bx, by, r) in &blobs {
                let d = ((x as f64 - bx).powi(2) + (y as f64 - by).powi(2)).sqrt();
                m = m.max(opacity * (1.0 - smoothstep(0.5 * r, r, d)));
            }
            if m > 0.0 {
                let m = m as f32;
                let px = img.pixel(x, y).map(|s| s * (1.0 - m) + 0.03 * m);
                out.set_pixel(x, y, px);
            }
        }
    }
    Ok(out)
}

/// A vertical band of stuck, striped output, `[band width as fraction of width]`.
pub fn sensor_broken(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (w, h) = img.dimensions();
    let bw = ((p[0] * w as f64).round() as usize).clamp(1, w);
    let x0 = cx.rng.below(w - bw + 1);
    let base = [0; 3].map(|_| cx.rng.uniform() as f32);
    let mut out = img.clone();
    for y in 0..h {
        let stripe = if (y / 2) % 2 == 0 { 1.0 } else { 0.6 };
        for x in x0..x0 + bw {
            out.set_pixel(x, y, base.map(|c| c * stripe));
        }
    }
    Ok(out)
}

const MEMORY_BLOCK: usize = 16;

/// Corrupts a random fraction of 16x16 blocks, `[fraction]`. Every block draws
/// the same number of samples so that the corrupted set grows with the fraction.
pub fn memory_exceptions(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let frac = p[0];
    let (w, h) = img.dimensions();
    let (bx_n, by_n) = (w.div_ceil(MEMORY_BLOCK), h.div_ceil(MEMORY_BLOCK));
    let mut out = img.clone();
    for by in 0..by_n {
        for bx in 0..bx_n {
            let hit = cx.rng.uniform() < frac;
            let kind = cx.rng.below(3);
            let color = [0; 3].map(|_| cx.rng.uniform() as f32);
            let src_b = (cx.rng.below(bx_n), cx.rng.below(by_n));
            if !hit {
                continue;
            }
            let (x0, y0) = (bx * MEMORY_BLOCK, by * MEMORY_BLOCK);
            for y in y0..(y0 + MEMORY_BLOCK).min(h) {
                for x in x0..(x0 + MEMORY_BLOCK).min(w) {
                    let px = match kind {
                        0 => color,
                        1 => {
                            let sx = (src_b.0 * MEMORY_BLOCK + x - x0).min(w - 1);
                            let sy = (src_b.1 * MEMORY_BLOCK + y - y0).min(h - 1);
                            img.pixel(sx, sy)
                        }
                        _ => [0.0; 3],
                    };
                    out.set_pixel(x, y, px);
                }
            }
        }
    }
    Ok(out)
}

/// Horizontally shifts a random fraction of rows (wrapping), `[row fraction, max shift as fraction of width]`.
pub fn transfer_harness(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (frac, max_shift) = (p[0], p[1]);
    let (w, h) = img.dimensions();
    let span = (max_shift * w as f64).round() as i64;
    let mut out = img.clone();
    for y in 0..h {
        let hit = cx.rng.uniform() < frac;
        let shift = cx.rng.int_in(-span, span);
        if !hit || shift == 0 {
            continue;
        }
        for x in 0..w {
            let sx = (x as i64 - shift).rem_euclid(w as i64) as usize;
            out.set_pixel(x, y, img.pixel(sx, y));
        }
    }
    Ok(out)
}

/// RGGB mosaic with a crude nearest-neighbour demosaic, blended in by `[weight]`.
pub fn cfa_interpolation(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let t = p[0] as f32;
    let (w, h) = img.dimensions();
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let (x0, y0) = (x & !1, y & !1);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let r = img.get(x0, y0, 0);
            let g = 0.5 * (img.get(x1, y0, 1) + img.get(x0, y1, 1));
            let b = img.get(x1, y1, 2);
            let src = img.pixel(x, y);
            let dem = [r, g, b];
            out.set_pixel(x, y, std::array::from_fn(|c| src[c] * (1.0 - t) + dem[c] * t));
        }
    }
    Ok(out)
}
