use super::colorspace::{rgb_to_ycbcr, ycbcr_to_rgb};
use super::OpContext;
use crate::error::Result;
use crate::image::{decode_image, encode_image, FileFormat, Image};

/// Baseline JPEG round trip, `[quality]`.
pub fn jpeg(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let q = p[0].round().clamp(1.0, 100.0) as u8;
    decode_image(&encode_image(img, FileFormat::Jpeg(q))?)
}

fn lift_forward(x: &mut [f64], tmp: &mut Vec<f64>) {
    let n = x.len();
    if n < 2 {
        return;
    }
    let (ns, nd) = (n.div_ceil(2), n / 2);
    for i in 0..nd {
        let right = if 2 * i + 2 < n { x[2 * i + 2] } else { x[2 * i] };
        x[2 * i + 1] -= 0.5 * (x[2 * i] + right);
    }
    for i in 0..ns {
        let dl = if i > 0 { x[2 * i - 1] } else { x[1] };
        let dr = if 2 * i + 1 < n { x[2 * i + 1] } else { x[2 * i - 1] };
        x[2 * i] += 0.25 * (dl + dr);
    }
    tmp.clear();
    tmp.extend(x.iter().step_by(2));
    tmp.extend(x.iter().skip(1).step_by(2));
    x.copy_from_slice(tmp);
}

fn lift_inverse(x: &mut [f64], tmp: &mut Vec<f64>) {
    let n = x.len();
    if n < 2 {
        return;
    }
    let ns = n.div_ceil(2);
    tmp.clear();
    tmp.resize(n, 0.0);
    for i in 0..n {
        tmp[i] = if i % 2 == 0 { x[i / 2] } else { x[ns + i / 2] };
    }
    x.copy_from_slice(tmp);
    for i in 0..ns {
        let dl = if i > 0 { x[2 * i - 1] } else { x[1] };
        let dr = if 2 * i + 1 < n { x[2 * i + 1] } else { x[2 * i - 1] };
        x[2 * i] -= 0.25 * (dl + dr);
    }
    for i in 0..n / 2 {
        let right = if 2 * i + 2 < n { x[2 * i + 2] } else { x[2 * i] };
        x[2 * i + 1] += 0.5 * (x[2 * i] + right);
    }
}

fn levels_for(w: usize, h: usize) -> usize {
    let mut lv = 0;
    let (mut w, mut h) = (w, h);
    while lv < 5 && w >= 16 && h >= 16 {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
        lv += 1;
    }
    lv
}

fn rows(plane: &mut [f64], stride: usize, rw: usize, rh: usize, f: fn(&mut [f64], &mut Vec<f64>)) {
    let mut tmp = Vec::new();
    for y in 0..rh {
        f(&mut plane[y * stride..y * stride + rw], &mut tmp);
    }
}

fn cols(plane: &mut [f64], stride: usize, rw: usize, rh: usize, f: fn(&mut [f64], &mut Vec<f64>)) {
    let (mut line, mut tmp) = (Vec::with_capacity(rh), Vec::new());
    for x in 0..rw {
        line.clear();
        line.extend((0..rh).map(|y| plane[y * stride + x]));
        f(&mut line, &mut tmp);
        for (y, v) in line.iter().enumerate() {
            plane[y * stride + x] = *v;
        }
    }
}

/// Multi-level separable transform; each level works on the previous low band.
fn transform_2d(plane: &mut [f64], w: usize, h: usize, levels: usize, inverse: bool) {
    let mut sizes = vec![(w, h)];
    for _ in 1..levels {
        let (lw, lh) = sizes[sizes.len() - 1];
        sizes.push((lw.div_ceil(2), lh.div_ceil(2)));
    }
    sizes.truncate(levels);
    if inverse {
        for &(rw, rh) in sizes.iter().rev() {
            cols(plane, w, rw, rh, lift_inverse);
            rows(plane, w, rw, rh, lift_inverse);
        }
    } else {
        for &(rw, rh) in &sizes {
            rows(plane, w, rw, rh, lift_forward);
            cols(plane, w, rw, rh, lift_forward);
        }
    }
}

/// Wavelet-domain compression stand-in: CDF 5/3 transform of the YCbCr planes,
/// keeping only the largest `3 / ratio` fraction of coefficients, `[ratio]`.
pub fn jpeg2000(img: &Image, p: &[f64], _: &mut OpContext<'_>) -> Result<Image> {
    let keep = (3.0 / p[0].max(1.0)).min(1.0);
    let (w, h) = img.dimensions();
    let levels = levels_for(w, h);
    let mut planes = [vec![0.0f64; w * h], vec![0.0f64; w * h], vec![0.0f64; w * h]];
    for (i, px) in img.data().chunks_exact(3).enumerate() {
        let ycc = rgb_to_ycbcr([px[0], px[1], px[2]]);
        for c in 0..3 {
            planes[c][i] = ycc[c] as f64;
        }
    }
    for plane in planes.iter_mut() {
        transform_2d(plane, w, h, levels, false);
    }
    let total = 3 * w * h;
    let kept = ((total as f64 * keep).round() as usize).clamp(1, total);
    if kept < total {
        let mut mags: Vec<f64> = planes.iter().flatten().map(|v| v.abs()).collect();
        let (_, &mut thr, _) = mags.select_nth_unstable_by(total - kept, |a, b| a.total_cmp(b));
        for v in planes.iter_mut().flatten() {
            if v.abs() < thr {
                *v = 0.0;
            }
        }
    }
    for plane in planes.iter_mut() {
        transform_2d(plane, w, h, levels, true);
    }
    let mut data = Vec::with_capacity(total);
    for i in 0..w * h {
        let rgb = ycbcr_to_rgb([planes[0][i] as f32, planes[1][i] as f32, planes[2][i] as f32]);
        data.extend_from_slice(&rgb);
    }
    Image::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr;
    use crate::rng::{RngStream, StreamId};

    fn cx() -> OpContext<'static> {
        OpContext {
            rng: RngStream::new(0, StreamId::default()),
            assets: None,
        }
    }

    fn textured(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y, c| {
            (0.5 + 0.4 * ((x as f32 * 0.3).sin() * (y as f32 * 0.2 + c as f32).cos())).clamp(0.0, 1.0)
        })
    }

    #[test]
    fn wavelet_is_perfect_reconstruction() {
        for (w, h) in [(37, 29), (64, 64), (17, 40)] {
            let src: Vec<f64> = (0..w * h).map(|i| ((i * 31) % 97) as f64 / 97.0).collect();
            let mut plane = src.clone();
            let lv = levels_for(w, h);
            transform_2d(&mut plane, w, h, lv, false);
            transform_2d(&mut plane, w, h, lv, true);
            for (a, b) in plane.iter().zip(&src) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stronger_ratio_loses_more() {
        let img = textured(64, 48);
        let a = jpeg2000(&img, &[16.0], &mut cx()).unwrap();
        let b = jpeg2000(&img, &[170.0], &mut cx()).unwrap();
        assert!(psnr(&img, &a).unwrap() > psnr(&img, &b).unwrap());
    }

    #[test]
    fn jpeg_quality_orders_error() {
        let img = textured(64, 64);
        let hi = jpeg(&img, &[90.0], &mut cx()).unwrap();
        let lo = jpeg(&img, &[5.0], &mut cx()).unwrap();
        assert!(psnr(&img, &hi).unwrap() > psnr(&img, &lo).unwrap());
    }
}
