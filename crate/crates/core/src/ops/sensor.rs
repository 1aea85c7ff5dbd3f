use super::OpContext;
use crate::error::Result;
use crate::image::Image;

/// Read noise plus bright vertical smear columns, `[sigma, column fraction]`.
pub fn ccd(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (sigma, frac) = (p[0], p[1]);
    let w = img.width();
    let rng = &mut cx.rng;
    let streak: Vec<f32> = (0..w)
        .map(|_| {
            let hit = rng.uniform() < frac;
            let level = rng.uniform_in(0.2, 0.5) as f32;
            if hit {
                level
            } else {
                0.0
            }
        })
        .collect();
    let mut out = img.clone();
    for (i, s) in out.data_mut().iter_mut().enumerate() {
        let x = (i / 3) % w;
        *s += (sigma * rng.gaussian()) as f32 + streak[x];
    }
    Ok(out)
}

/// Row fixed-pattern noise, read noise and dead or hot rows, `[sigma, row fraction]`.
pub fn cmos(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (sigma, frac) = (p[0], p[1]);
    let w = img.width();
    let rng = &mut cx.rng;
    let rows: Vec<(f32, Option<f32>)> = (0..img.height())
        .map(|_| {
            let offset = (0.5 * sigma * rng.gaussian()) as f32;
            let hit = rng.uniform() < frac;
            let stuck = if rng.uniform() < 0.5 { 0.0 } else { 1.0 };
            (offset, hit.then_some(stuck))
        })
        .collect();
    let mut out = img.clone();
    for (i, s) in out.data_mut().iter_mut().enumerate() {
        let (offset, stuck) = rows[i / 3 / w];
        let n = (sigma * rng.gaussian()) as f32;
        *s = match stuck {
            Some(v) => v,
            None => *s + offset + n,
        };
    }
    Ok(out)
}

/// Square clusters of stuck pixels, `[density, cluster size]`.
pub fn bad_pixels(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (w, h) = img.dimensions();
    let size = (p[1].round().max(1.0) as usize).min(w).min(h);
    let clusters = (p[0] * (w * h) as f64 / size as f64).round() as usize;
    let mut out = img.clone();
    for _ in 0..clusters {
        let x0 = cx.rng.below(w - size + 1);
        let y0 = cx.rng.below(h - size + 1);
        let value = match cx.rng.below(3) {
            0 => [0.0; 3],
            1 => [1.0; 3],
            _ => [0; 3].map(|_| cx.rng.uniform() as f32),
        };
        for y in y0..y0 + size {
            for x in x0..x0 + size {
                out.set_pixel(x, y, value);
            }
        }
    }
    Ok(out)
}
