use std::path::Path;

use super::blur::motion_trail_plane;
use super::kernels::{clipped_zoom_plane, gaussian_blur_plane, plasma_field, resize_nearest};
use super::OpContext;
use crate::error::{Error, Result};
use crate::image::{load_image, Image};

/// Additive plasma haze, `[density, decay]`.
pub fn fog_plasma(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (c0, decay) = (p[0] as f32, p[1]);
    let (w, h) = img.dimensions();
    let field = plasma_field(w, h, decay, &mut cx.rng);
    let max = img.data().iter().fold(0.0f32, |m, &s| m.max(s));
    let scale = if max + c0 > 0.0 { max / (max + c0) } else { 1.0 };
    let mut out = img.clone();
    for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
        for s in px {
            *s = (*s + c0 * field[i]) * scale;
        }
    }
    Ok(out)
}

/// Atmospheric scattering over a procedural depth map, `[beta, airlight]`.
pub fn fog_scattering(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (beta, airlight) = (p[0], p[1] as f32);
    let (w, h) = img.dimensions();
    let field = plasma_field(w, h, 2.0, &mut cx.rng);
    let mut out = img.clone();
    for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
        let y = (i / w) as f64;
        let depth = 0.5 * (1.0 - y / h.max(1) as f64) + 0.5 * field[i] as f64;
        let t = (-beta * (0.3 + 0.7 * depth)).exp() as f32;
        for s in px {
            *s = *s * t + airlight * (1.0 - t);
        }
    }
    Ok(out)
}

fn frost_textures(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("png" | "jpg" | "jpeg")
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Blend with a frost texture from `<assets>/frost`, `[image weight, frost weight]`.
pub fn frost(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (a, b) = (p[0] as f32, p[1] as f32);
    let dir = cx
        .assets
        .map(|d| d.join("frost"))
        .ok_or_else(|| Error::UnavailableFeature("frost needs an asset directory (IMDEG_ASSETS)".into()))?;
    let files = frost_textures(&dir)
        .ok()
        .filter(|f| !f.is_empty())
        .ok_or_else(|| Error::UnavailableFeature(format!("no frost textures in {}", dir.display())))?;
    let pick = cx.rng.below(files.len());
    let mut tex = load_image(&files[pick])?;
    let (w, h) = img.dimensions();
    if tex.width() < w || tex.height() < h {
        let s = (w as f64 / tex.width() as f64).max(h as f64 / tex.height() as f64);
        let nw = (tex.width() as f64 * s).ceil() as usize;
        let nh = (tex.height() as f64 * s).ceil() as usize;
        tex = resize_nearest(&tex, nw.max(w), nh.max(h));
    }
    let x0 = cx.rng.below(tex.width() - w + 1);
    let y0 = cx.rng.below(tex.height() - h + 1);
    Ok(Image::from_fn(w, h, |x, y, c| {
        a * img.get(x, y, c) + b * tex.get(x0 + x, y0 + y, c)
    }))
}

/// Falling snow: thresholded, zoomed noise streaked by motion blur, over a
/// greyed-out frame. `[loc, scale, zoom, threshold, radius, sigma, blend]`.
pub fn snow(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (w, h) = img.dimensions();
    let rng = &mut cx.rng;
    let layer: Vec<f32> = (0..w * h)
        .map(|_| (p[0] + p[1] * rng.gaussian()) as f32)
        .collect();
    let mut layer = clipped_zoom_plane(&layer, w, h, p[2]);
    let thr = p[3] as f32;
    layer.iter_mut().filter(|s| **s < thr).for_each(|s| *s = 0.0);
    let angle = rng.uniform_in(-135.0, -45.0);
    let layer = motion_trail_plane(&layer, w, h, p[4], p[5], angle);
    let blend = p[6] as f32;
    let mut out = img.clone();
    for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
        let gray = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) * 1.5 + 0.5;
        let flake = layer[i] + layer[w * h - 1 - i];
        for s in px {
            *s = blend * *s + (1.0 - blend) * s.max(gray);
            *s = (*s).min(1.0) + flake;
        }
    }
    Ok(out)
}

/// Water or mud droplets, `[loc, scale, sigma, threshold, intensity, mode]`
/// with mode 0 for water and 1 for mud.
pub fn spatter(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (w, h) = img.dimensions();
    let rng = &mut cx.rng;
    let liquid: Vec<f32> = (0..w * h)
        .map(|_| (p[0] + p[1] * rng.gaussian()) as f32)
        .collect();
    let liquid = gaussian_blur_plane(&liquid, w, h, p[2]);
    let thr = p[3] as f32;
    let mut out = img.clone();
    if p[5] < 0.5 {
        let wet: Vec<f32> = liquid.iter().map(|&l| if l > thr { l } else { 0.0 }).collect();
        let mut m = gaussian_blur_plane(&wet, w, h, 1.5);
        let max = m.iter().fold(0.0f32, |a, &b| a.max(b)).max(1e-6);
        m.iter_mut().for_each(|v| *v = *v / max * p[4] as f32);
        let color = [175.0 / 255.0, 238.0 / 255.0, 238.0 / 255.0];
        for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
            for (s, c) in px.iter_mut().zip(color) {
                *s += m[i] * c;
            }
        }
    } else {
        let hard: Vec<f32> = liquid.iter().map(|&l| (l > thr) as u8 as f32).collect();
        let mut m = gaussian_blur_plane(&hard, w, h, p[4]);
        m.iter_mut().filter(|v| **v < 0.8).for_each(|v| *v = 0.0);
        let mud = [63.0 / 255.0, 42.0 / 255.0, 20.0 / 255.0];
        for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
            for (s, c) in px.iter_mut().zip(mud) {
                *s = *s * (1.0 - m[i]) + c * m[i];
            }
        }
    }
    Ok(out)
}
