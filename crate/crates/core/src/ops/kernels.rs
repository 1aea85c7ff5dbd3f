//! Filtering and resampling on single-channel planes.
//!
//! Planes are row-major `f32` buffers of `width * height` samples. Borders
//! use symmetric reflection (`d c b a | a b c d | d c b a`).

use crate::image::Image;
use crate::rng::RngStream;

/// Symmetric-reflect an index into `0..n`.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m - 1;
    }
    m as usize
}

#[inline]
pub fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Normalised 1-D Gaussian taps out to `truncate * sigma`.
pub fn gaussian_taps(sigma: f64, truncate: f64) -> Vec<f32> {
    if !(sigma > 0.0) {
        return vec![1.0];
    }
    let radius = (truncate * sigma).ceil().max(1.0) as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps.into_iter().map(|t| t as f32).collect()
}

fn convolve_rows(src: &[f32], width: usize, height: usize, taps: &[f32]) -> Vec<f32> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0f32; src.len()];
    let mut padded = vec![0.0f32; width + 2 * r as usize];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row[reflect(i as isize - r, width)];
        }
        let dst = &mut out[y * width..(y + 1) * width];
        for (d, win) in dst.iter_mut().zip(padded.windows(taps.len())) {
            let mut acc = 0.0f32;
            for (&t, &v) in taps.iter().zip(win) {
                acc += t * v;
            }
            *d = acc;
        }
    }
    out
}

fn convolve_cols(src: &[f32], width: usize, height: usize, taps: &[f32]) -> Vec<f32> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0f32; src.len()];
    for (k, &t) in taps.iter().enumerate() {
        for y in 0..height {
            let yi = reflect(y as isize + k as isize - r, height);
            let s = &src[yi * width..(yi + 1) * width];
            let d = &mut out[y * width..(y + 1) * width];
            for (dv, sv) in d.iter_mut().zip(s) {
                *dv += t * sv;
            }
        }
    }
    out
}

/// Separable convolution with the same taps horizontally and vertically.
pub fn convolve_separable(src: &[f32], width: usize, height: usize, taps: &[f32]) -> Vec<f32> {
    if taps.len() == 1 {
        return src.iter().map(|v| v * taps[0]).collect();
    }
    let tmp = convolve_rows(src, width, height, taps);
    convolve_cols(&tmp, width, height, taps)
}

pub fn gaussian_blur_plane(src: &[f32], width: usize, height: usize, sigma: f64) -> Vec<f32> {
    convolve_separable(src, width, height, &gaussian_taps(sigma, 4.0))
}

/// A dense 2-D kernel with odd side lengths, centred.
#[derive(Debug, Clone)]
pub struct Kernel2d {
    pub width: usize,
    pub height: usize,
    pub taps: Vec<f32>,
}

impl Kernel2d {
    pub fn normalized(mut self) -> Self {
        let sum: f32 = self.taps.iter().sum();
        if sum > 0.0 {
            self.taps.iter_mut().for_each(|t| *t /= sum);
        }
        self
    }

    pub fn is_identity(&self) -> bool {
        self.width == 1 && self.height == 1
    }
}

/// Flat disk of `radius` pixels, optionally softened by a small Gaussian.
pub fn disk_kernel(radius: f64, alias_sigma: f64) -> Kernel2d {
    let r = radius.max(0.0);
    let half = r.ceil() as isize + if alias_sigma > 0.0 { 1 } else { 0 };
    let side = (2 * half + 1) as usize;
    let mut taps = vec![0.0f32; side * side];
    for y in -half..=half {
        for x in -half..=half {
            if ((x * x + y * y) as f64) <= r * r {
                taps[((y + half) as usize) * side + (x + half) as usize] = 1.0;
            }
        }
    }
    if alias_sigma > 0.0 {
        let g = gaussian_taps(alias_sigma, 2.0);
        taps = convolve_separable(&taps, side, side, &g);
    }
    Kernel2d {
        width: side,
        height: side,
        taps,
    }
    .normalized()
}

/// Line kernel of `length` pixels through the centre at `angle_deg`.
pub fn line_kernel(length: f64, angle_deg: f64) -> Kernel2d {
    let len = length.max(1.0);
    if len <= 1.0 {
        return Kernel2d {
            width: 1,
            height: 1,
            taps: vec![1.0],
        };
    }
    let half = ((len - 1.0) / 2.0).ceil() as isize;
    let side = (2 * half + 1) as usize;
    let (s, c) = angle_deg.to_radians().sin_cos();
    let mut taps = vec![0.0f32; side * side];
    // Sample the segment densely and splat bilinearly.
    let steps = (len * 8.0).ceil() as usize;
    for i in 0..=steps {
        let t = -((len - 1.0) / 2.0) + (len - 1.0) * i as f64 / steps as f64;
        let (px, py) = (t * c + half as f64, -t * s + half as f64);
        let (x0, y0) = (px.floor(), py.floor());
        let (fx, fy) = ((px - x0) as f32, (py - y0) as f32);
        for (dx, dy, w) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            let (xi, yi) = (x0 as isize + dx, y0 as isize + dy);
            if xi >= 0 && yi >= 0 && (xi as usize) < side && (yi as usize) < side {
                taps[yi as usize * side + xi as usize] += w;
            }
        }
    }
    Kernel2d {
        width: side,
        height: side,
        taps,
    }
    .normalized()
}

pub fn convolve_2d(src: &[f32], width: usize, height: usize, k: &Kernel2d) -> Vec<f32> {
    if k.is_identity() {
        return src.iter().map(|v| v * k.taps[0]).collect();
    }
    let (rx, ry) = ((k.width / 2) as isize, (k.height / 2) as isize);
    let nonzero: Vec<(isize, isize, f32)> = (0..k.height)
        .flat_map(|ky| (0..k.width).map(move |kx| (kx, ky)))
        .filter_map(|(kx, ky)| {
            let t = k.taps[ky * k.width + kx];
            (t != 0.0).then_some((kx as isize - rx, ky as isize - ry, t))
        })
        .collect();
    // Reflect-pad once, then accumulate one tap at a time over whole rows.
    // Per pixel the taps are summed in the same order as a direct loop.
    let (pw, ph) = (width + 2 * rx as usize, height + 2 * ry as usize);
    let mut padded = Vec::with_capacity(pw * ph);
    for py in 0..ph {
        let row = reflect(py as isize - ry, height) * width;
        padded.extend((0..pw).map(|px| src[row + reflect(px as isize - rx, width)]));
    }
    let mut out = vec![0.0f32; src.len()];
    for &(dx, dy, t) in &nonzero {
        for y in 0..height {
            let start = (y as isize + dy + ry) as usize * pw + (dx + rx) as usize;
            let from = &padded[start..start + width];
            for (o, v) in out[y * width..(y + 1) * width].iter_mut().zip(from) {
                *o += t * v;
            }
        }
    }
    out
}

/// Applies `f` to each channel plane and reassembles the image.
pub fn per_plane(img: &Image, mut f: impl FnMut(&[f32], usize, usize) -> Vec<f32>) -> Image {
    let (w, h) = img.dimensions();
    let [r, g, b] = img.planes();
    Image::from_planes(w, h, [f(&r, w, h), f(&g, w, h), f(&b, w, h)]).expect("plane sizes preserved")
}

pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    if !(sigma > 0.0) {
        return img.clone();
    }
    let taps = gaussian_taps(sigma, 4.0);
    per_plane(img, |p, w, h| convolve_separable(p, w, h, &taps))
}

pub fn convolve_image(img: &Image, k: &Kernel2d) -> Image {
    per_plane(img, |p, w, h| convolve_2d(p, w, h, k))
}

/// Bilinear sample of a plane at fractional coordinates, reflecting at borders.
#[inline]
pub fn sample_bilinear(src: &[f32], width: usize, height: usize, x: f64, y: f64) -> f32 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = ((x - x0) as f32, (y - y0) as f32);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let xa = reflect(x0, width);
    let xb = reflect(x0 + 1, width);
    let ya = reflect(y0, height);
    let yb = reflect(y0 + 1, height);
    let top = src[ya * width + xa] * (1.0 - fx) + src[ya * width + xb] * fx;
    let bot = src[yb * width + xa] * (1.0 - fx) + src[yb * width + xb] * fx;
    top * (1.0 - fy) + bot * fy
}

/// Resamples `img` through a coordinate map: output pixel (x, y) reads the
/// input at `map(x, y)`.
pub fn remap(img: &Image, mut map: impl FnMut(usize, usize) -> (f64, f64)) -> Image {
    let (w, h) = img.dimensions();
    let planes = img.planes();
    let mut out = vec![0.0f32; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = map(x, y);
            for c in 0..3 {
                out[(y * w + x) * 3 + c] = sample_bilinear(&planes[c], w, h, sx, sy);
            }
        }
    }
    Image::new(w, h, out).expect("same shape")
}

/// Area-average downsampling (box filter) to `nw x nh`.
pub fn resize_box(img: &Image, nw: usize, nh: usize) -> Image {
    let (w, h) = img.dimensions();
    let (nw, nh) = (nw.max(1), nh.max(1));
    if (nw, nh) == (w, h) {
        return img.clone();
    }
    let sx = w as f64 / nw as f64;
    let sy = h as f64 / nh as f64;
    let mut out = vec![0.0f32; nw * nh * 3];
    for oy in 0..nh {
        let (y0, y1) = (oy as f64 * sy, (oy + 1) as f64 * sy);
        for ox in 0..nw {
            let (x0, x1) = (ox as f64 * sx, (ox + 1) as f64 * sx);
            let mut acc = [0.0f64; 3];
            let mut area = 0.0f64;
            let mut yy = y0.floor() as usize;
            while (yy as f64) < y1 && yy < h {
                let wy = (y1.min(yy as f64 + 1.0) - y0.max(yy as f64)).max(0.0);
                let mut xx = x0.floor() as usize;
                while (xx as f64) < x1 && xx < w {
                    let wx = (x1.min(xx as f64 + 1.0) - x0.max(xx as f64)).max(0.0);
                    let wgt = wx * wy;
                    let px = img.pixel(xx, yy);
                    for c in 0..3 {
                        acc[c] += wgt * px[c] as f64;
                    }
                    area += wgt;
                    xx += 1;
                }
                yy += 1;
            }
            for c in 0..3 {
                out[(oy * nw + ox) * 3 + c] = (acc[c] / area.max(1e-12)) as f32;
            }
        }
    }
    Image::new(nw, nh, out).expect("dimensions checked")
}

/// Nearest-neighbour resize to `nw x nh`.
pub fn resize_nearest(img: &Image, nw: usize, nh: usize) -> Image {
    let (w, h) = img.dimensions();
    if (nw, nh) == (w, h) {
        return img.clone();
    }
    Image::from_fn(nw, nh, |x, y, c| {
        let sx = (((x as f64 + 0.5) * w as f64 / nw as f64) as usize).min(w - 1);
        let sy = (((y as f64 + 0.5) * h as f64 / nh as f64) as usize).min(h - 1);
        img.get(sx, sy, c)
    })
}

/// Scales about the centre by `zoom >= 1` and crops back to the input size.
pub fn clipped_zoom(img: &Image, zoom: f64) -> Image {
    if zoom == 1.0 {
        return img.clone();
    }
    let (w, h) = img.dimensions();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    remap(img, |x, y| ((x as f64 - cx) / zoom + cx, (y as f64 - cy) / zoom + cy))
}

/// Same as [`clipped_zoom`] for one plane.
pub fn clipped_zoom_plane(src: &[f32], width: usize, height: usize, zoom: f64) -> Vec<f32> {
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let mut out = vec![0.0f32; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = sample_bilinear(
                src,
                width,
                height,
                (x as f64 - cx) / zoom + cx,
                (y as f64 - cy) / zoom + cy,
            );
        }
    }
    out
}

/// Diamond-square fractal on a `size x size` grid (`size` a power of two),
/// normalised to `[0, 1]`. `decay` controls roughness.
pub fn plasma_fractal(size: usize, decay: f64, rng: &mut RngStream) -> Vec<f32> {
    assert!(size.is_power_of_two() && size >= 2);
    let n = size;
    let mut map = vec![0.0f64; n * n];
    let idx = |y: usize, x: usize| (y % n) * n + (x % n);
    let mut step = n;
    let mut range = 100.0f64;
    while step >= 2 {
        let half = step / 2;
        // squares: centre of each square gets the corner mean plus noise
        for y in (0..n).step_by(step) {
            for x in (0..n).step_by(step) {
                let mean = (map[idx(y, x)] + map[idx(y, x + step)] + map[idx(y + step, x)] + map[idx(y + step, x + step)]) / 4.0;
                map[idx(y + half, x + half)] = mean + range * rng.uniform_in(-1.0, 1.0);
            }
        }
        // diamonds: edge midpoints
        for y in (0..n).step_by(step) {
            for x in (0..n).step_by(step) {
                let c = map[idx(y + half, x + half)];
                let up = map[idx((y + n - half) % n, x + half)];
                let left = map[idx(y + half, (x + n - half) % n)];
                let top = (map[idx(y, x)] + map[idx(y, x + step)] + c + up) / 4.0;
                let lft = (map[idx(y, x)] + map[idx(y + step, x)] + c + left) / 4.0;
                map[idx(y, x + half)] = top + range * rng.uniform_in(-1.0, 1.0);
                map[idx(y + half, x)] = lft + range * rng.uniform_in(-1.0, 1.0);
            }
        }
        step = half;
        range /= decay;
    }
    let (lo, hi) = map
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = (hi - lo).max(1e-12);
    map.into_iter().map(|v| ((v - lo) / span) as f32).collect()
}

/// Plasma field covering at least `width x height`, cropped to that size.
pub fn plasma_field(width: usize, height: usize, decay: f64, rng: &mut RngStream) -> Vec<f32> {
    let size = width.max(height).max(2).next_power_of_two();
    let full = plasma_fractal(size, decay, rng);
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        out.extend_from_slice(&full[y * size..y * size + width]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamId;

    #[test]
    fn reflect_indices() {
        let got: Vec<_> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        assert_eq!(reflect(-5, 1), 0);
    }

    #[test]
    fn taps_are_normalized() {
        for sigma in [0.1, 0.5, 1.5, 6.0] {
            let t = gaussian_taps(sigma, 4.0);
            let s: f32 = t.iter().sum();
            assert!((s - 1.0).abs() < 1e-5);
            assert_eq!(t.len() % 2, 1);
        }
        assert_eq!(gaussian_taps(0.0, 4.0), vec![1.0]);
    }

    #[test]
    fn blur_preserves_constant() {
        let p = vec![0.3f32; 20 * 10];
        let out = gaussian_blur_plane(&p, 20, 10, 3.0);
        assert!(out.iter().all(|v| (v - 0.3).abs() < 1e-5));
        let k = disk_kernel(4.0, 0.5);
        let out = convolve_2d(&p, 20, 10, &k);
        assert!(out.iter().all(|v| (v - 0.3).abs() < 1e-5));
    }

    #[test]
    fn line_kernel_is_normalized_and_unit_length_is_identity() {
        let k = line_kernel(9.0, 30.0);
        assert!((k.taps.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        assert!(line_kernel(1.0, 77.0).is_identity());
    }

    #[test]
    fn resize_identity_and_box_mean() {
        let img = Image::from_fn(6, 4, |x, y, c| (x + y + c) as f32 / 20.0);
        assert_eq!(resize_box(&img, 6, 4), img);
        assert_eq!(resize_nearest(&img, 6, 4), img);
        let small = resize_box(&img, 1, 1);
        let mean_r: f32 = img.planes()[0].iter().sum::<f32>() / 24.0;
        assert!((small.get(0, 0, 0) - mean_r).abs() < 1e-6);
    }

    #[test]
    fn plasma_in_unit_range() {
        let mut rng = RngStream::new(1, StreamId::default());
        let p = plasma_field(40, 30, 2.0, &mut rng);
        assert_eq!(p.len(), 1200);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
