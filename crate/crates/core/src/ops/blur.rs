use super::kernels::{
    clipped_zoom, convolve_image, disk_kernel, gaussian_blur, line_kernel, per_plane, reflect,
};
use super::OpContext;
use crate::error::Result;
use crate::image::Image;

/// `[sigma]`
pub fn gaussian(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    Ok(gaussian_blur(img, p[0]))
}

/// Aliased disk, `[radius, alias_sigma]`.
pub fn defocus(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    Ok(convolve_image(img, &disk_kernel(p[0], p[1])))
}

/// Hard-edged disk (lens PSF), `[radius]`.
pub fn lens(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    Ok(convolve_image(img, &disk_kernel(p[0], 0.0)))
}

/// Straight-line kernel at a random orientation, `[length]`.
pub fn motion_line(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let angle = cx.rng.uniform_in(0.0, 180.0);
    Ok(convolve_image(img, &line_kernel(p[0], angle)))
}

/// One-sided half-Gaussian trail of shifted copies along `angle_deg`.
pub(crate) fn motion_trail_plane(
    src: &[f32],
    width: usize,
    height: usize,
    radius: f64,
    sigma: f64,
    angle_deg: f64,
) -> Vec<f32> {
    let taps_n = (2.0 * radius).round() as usize + 1;
    let mut taps: Vec<f64> = (0..taps_n)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    let (sy, sx) = angle_deg.to_radians().sin_cos();
    let mut out = vec![0.0f32; src.len()];
    for (i, &t) in taps.iter().enumerate() {
        let dy = -((i as f64 * sy) - 0.5).ceil() as isize;
        let dx = -((i as f64 * sx) - 0.5).ceil() as isize;
        if dy.unsigned_abs() >= height || dx.unsigned_abs() >= width {
            break;
        }
        let t = t as f32;
        for y in 0..height {
            let yy = (y as isize - dy).clamp(0, height as isize - 1) as usize;
            for x in 0..width {
                let xx = (x as isize - dx).clamp(0, width as isize - 1) as usize;
                out[y * width + x] += t * src[yy * width + xx];
            }
        }
    }
    out
}

/// Camera-shake trail, `[radius, sigma]`, angle uniform in ±45°.
pub fn motion_trail(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let angle = cx.rng.uniform_in(-45.0, 45.0);
    let (radius, sigma) = (p[0], p[1]);
    Ok(per_plane(img, |pl, w, h| motion_trail_plane(pl, w, h, radius, sigma, angle)))
}

/// Average of centre zooms `start, start+step, ... < stop`, `[start, stop, step]`.
pub fn zoom(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let (start, stop, step) = (p[0], p[1], p[2]);
    let count = if step > 0.0 {
        ((stop - start) / step - 1e-9).ceil().max(0.0) as usize
    } else {
        0
    };
    let mut acc: Vec<f64> = img.data().iter().map(|&s| s as f64).collect();
    for i in 0..count {
        let z = start + i as f64 * step;
        let zoomed = clipped_zoom(img, z);
        acc.iter_mut().zip(zoomed.data()).for_each(|(a, &s)| *a += s as f64);
    }
    let n = (count + 1) as f64;
    let (w, h) = img.dimensions();
    Image::new(w, h, acc.into_iter().map(|a| (a / n) as f32).collect())
}

/// Blur, local pixel shuffling, blur; `[sigma, max_delta, iterations]`.
pub fn glass(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let (sigma, delta, iterations) = (p[0], p[1].round() as isize, p[2].round() as usize);
    let mut x = gaussian_blur(img, sigma);
    let (w, h) = x.dimensions();
    let (wi, hi) = (w as isize, h as isize);
    for _ in 0..iterations {
        let mut yy = hi - delta - 1;
        while yy > delta {
            let mut xx = wi - delta - 1;
            while xx > delta {
                let dx = cx.rng.int_in(-delta as i64, delta as i64 - 1) as isize;
                let dy = cx.rng.int_in(-delta as i64, delta as i64 - 1) as isize;
                let (sx, sy) = (reflect(xx + dx, w), reflect(yy + dy, h));
                let a = x.pixel(xx as usize, yy as usize);
                let b = x.pixel(sx, sy);
                x.set_pixel(xx as usize, yy as usize, b);
                x.set_pixel(sx, sy, a);
                xx -= 1;
            }
            yy -= 1;
        }
    }
    Ok(gaussian_blur(&x, sigma))
}

/// Unsharp mask `x + amount * (x - blur(x))`, `[amount, sigma]`.
pub fn high_sharpen(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let (amount, sigma) = (p[0] as f32, p[1]);
    let blurred = gaussian_blur(img, sigma);
    let (w, h) = img.dimensions();
    let data = img
        .data()
        .iter()
        .zip(blurred.data())
        .map(|(&s, &b)| s + amount * (s - b))
        .collect();
    Image::new(w, h, data)
}
