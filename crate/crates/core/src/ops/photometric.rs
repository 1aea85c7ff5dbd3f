use super::colorspace::{hsv_to_rgb, lab_to_rgb, rgb_to_hsv, rgb_to_lab};
use super::kernels::gaussian_blur_plane;
use super::OpContext;
use crate::error::Result;
use crate::image::Image;

/// HSV value shift, `[delta]`.
pub fn brightness(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let c = p[0] as f32;
    Ok(img.clone().map_pixels(|px| {
        let [h, s, v] = rgb_to_hsv(px);
        hsv_to_rgb([h, s, (v + c).clamp(0.0, 1.0)])
    }))
}

/// Pull toward the per-channel mean, `[factor]`.
pub fn contrast(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let c = p[0] as f32;
    let n = (img.width() * img.height()) as f64;
    let mut means = [0.0f64; 3];
    for px in img.data().chunks_exact(3) {
        for (m, &s) in means.iter_mut().zip(px) {
            *m += s as f64;
        }
    }
    let means = means.map(|m| (m / n) as f32);
    Ok(img
        .clone()
        .map_pixels(|px| std::array::from_fn(|i| (px[i] - means[i]) * c + means[i])))
}

/// HSV saturation `s * mult + add`, `[mult, add]`.
pub fn saturate(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let (mult, add) = (p[0] as f32, p[1] as f32);
    Ok(img.clone().map_pixels(|px| {
        let [h, s, v] = rgb_to_hsv(px);
        hsv_to_rgb([h, (s * mult + add).clamp(0.0, 1.0), v])
    }))
}

/// `1 - (1 - x) / (1 + a)`, `[a]`.
pub fn brighten(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let a = p[0] as f32;
    Ok(img.clone().map(|s| 1.0 - (1.0 - s) / (1.0 + a)))
}

/// `x * (1 - a)`, `[a]`.
pub fn darken(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let a = p[0] as f32;
    Ok(img.clone().map(|s| s * (1.0 - a)))
}

/// Additive offset, `[offset]`. Also covers black-level damage.
pub fn offset(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let o = p[0] as f32;
    Ok(img.clone().map(|s| s + o))
}

/// Black level left in the signal: `x + off`, `[off]`.
pub fn black_level_insufficient(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    offset(img, p, cx)
}

/// Black level subtracted twice over: `x - off`, `[off]`.
pub fn black_level_excessive(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    offset(img, &[-p[0]], cx)
}

/// HSV saturation scaled by `factor`, `[factor]`.
pub fn saturation_hsv(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let f = p[0] as f32;
    Ok(img.clone().map_pixels(|px| {
        let [h, s, v] = rgb_to_hsv(px);
        hsv_to_rgb([h, (s * f).clamp(0.0, 1.0), v])
    }))
}

/// Lab chroma scaled by `factor`, `[factor]`.
pub fn saturation_lab(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let f = p[0] as f32;
    Ok(img.clone().map_pixels(|px| {
        let [l, a, b] = rgb_to_lab(px);
        lab_to_rgb([l, a * f, b * f])
    }))
}

/// Blur the Lab chroma planes, `[sigma]`.
pub fn color_diffusion(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let sigma = p[0];
    let (w, h) = img.dimensions();
    let lab: Vec<[f32; 3]> = img
        .data()
        .chunks_exact(3)
        .map(|px| rgb_to_lab([px[0], px[1], px[2]]))
        .collect();
    let a: Vec<f32> = lab.iter().map(|v| v[1]).collect();
    let b: Vec<f32> = lab.iter().map(|v| v[2]).collect();
    let a = gaussian_blur_plane(&a, w, h, sigma);
    let b = gaussian_blur_plane(&b, w, h, sigma);
    let mut data = Vec::with_capacity(w * h * 3);
    for (i, v) in lab.iter().enumerate() {
        data.extend_from_slice(&lab_to_rgb([v[0], a[i], b[i]]));
    }
    Image::new(w, h, data)
}

/// Misregistered green channel blended in along a random gradient, `[max shift px]`.
pub fn color_shift(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let amount = p[0];
    let (w, h) = img.dimensions();
    let angle = cx.rng.uniform_in(0.0, std::f64::consts::TAU);
    let (dy, dx) = angle.sin_cos();
    let (sx, sy) = ((dx * amount).round() as isize, (dy * amount).round() as isize);
    let (gx, gy) = (cx.rng.uniform_in(-1.0, 1.0), cx.rng.uniform_in(-1.0, 1.0));
    let norm = (gx.abs() * w as f64 + gy.abs() * h as f64).max(1.0);
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let xx = (x as isize - sx).clamp(0, w as isize - 1) as usize;
            let yy = (y as isize - sy).clamp(0, h as isize - 1) as usize;
            let mut t = (gx * x as f64 + gy * y as f64) / norm;
            if t < 0.0 {
                t += 1.0;
            }
            let t = t.clamp(0.0, 1.0) as f32;
            let g = img.get(x, y, 1);
            out.set(x, y, 1, g * (1.0 - t) + img.get(xx, yy, 1) * t);
        }
    }
    Ok(out)
}

/// `(x - 0.5) * (1 + a) + 0.5`, `[a]`.
pub fn linear_contrast(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let a = p[0] as f32;
    Ok(img.clone().map(|s| (s - 0.5) * (1.0 + a) + 0.5))
}

/// Sigmoid tone curve with width `w` rescaled to hit 0 and 1 at the ends, `[w]`.
pub fn nonlinear_contrast(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let width = p[0].max(1e-6);
    let sig = |t: f64| 1.0 / (1.0 + (-(t - 0.5) / width).exp());
    let (lo, hi) = (sig(0.0), sig(1.0));
    Ok(img
        .clone()
        .map(|s| ((sig(s as f64) - lo) / (hi - lo)) as f32))
}

/// Radial vignetting gain `1 - strength * r^2`, r normalised to the corner, `[strength]`.
pub fn lens_shading(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let k = p[0];
    let (w, h) = img.dimensions();
    let (cx0, cy0) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let r2max = (cx0 * cx0 + cy0 * cy0).max(1e-12);
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx0, y as f64 - cy0);
            let g = (1.0 - k * (dx * dx + dy * dy) / r2max) as f32;
            let px = img.pixel(x, y).map(|s| s * g);
            out.set_pixel(x, y, px);
        }
    }
    Ok(out)
}

/// Red and blue white-balance gains, `[red gain, blue gain]`.
pub fn awb(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let (r, b) = (p[0] as f32, p[1] as f32);
    Ok(img.clone().map_pixels(|[pr, pg, pb]| [pr * r, pg, pb * b]))
}

/// `x^gamma`, `[gamma]`.
pub fn gamma(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let g = p[0] as f32;
    Ok(img.clone().map(|s| s.max(0.0).powf(g)))
}

/// Colour matrix `I + eps * E` with `E` uniform in [-1, 1], `[eps]`.
pub fn color_matrix(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let eps = p[0];
    let mut m = [[0.0f32; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let e = cx.rng.uniform_in(-1.0, 1.0);
            *v = ((i == j) as u8 as f64 + eps * e) as f32;
        }
    }
    Ok(img.clone().map_pixels(|px| {
        std::array::from_fn(|i| m[i][0] * px[0] + m[i][1] * px[1] + m[i][2] * px[2])
    }))
}

/// Uniform quantisation to `levels` values per channel, `[levels]`.
pub fn quantize(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let n = (p[0].round().max(2.0) - 1.0) as f32;
    Ok(img.clone().map(|s| (s.clamp(0.0, 1.0) * n).round() / n))
}
