use super::colorspace::{rgb_to_ycbcr, ycbcr_to_rgb};
use super::OpContext;
use crate::error::Result;
use crate::image::Image;

/// `x + sigma * n`, parameters `[sigma]`.
pub fn gaussian(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let sigma = p[0];
    let rng = &mut cx.rng;
    Ok(img.clone().map(|s| (s as f64 + sigma * rng.gaussian()) as f32))
}

/// Additive white noise given as a variance, `[variance]`.
pub fn white(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    gaussian(img, &[p[0].max(0.0).sqrt()], cx)
}

/// Poisson photon noise, `[photons at full scale]`.
pub fn shot(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let scale = p[0];
    let rng = &mut cx.rng;
    Ok(img
        .clone()
        .map(|s| (rng.poisson(s.clamp(0.0, 1.0) as f64 * scale) / scale) as f32))
}

/// Salt and pepper on a fraction of samples, `[amount]`.
pub fn impulse(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let amount = p[0];
    let rng = &mut cx.rng;
    Ok(img.clone().map(|s| {
        let hit = rng.uniform();
        let salt = rng.uniform() < 0.5;
        if hit < amount {
            if salt {
                1.0
            } else {
                0.0
            }
        } else {
            s
        }
    }))
}

/// Signal-dependent `x + x * sigma * n`, `[sigma]`.
pub fn speckle(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let sigma = p[0];
    let rng = &mut cx.rng;
    Ok(img
        .clone()
        .map(|s| (s as f64 * (1.0 + sigma * rng.gaussian())) as f32))
}

/// Speckle noise given as a variance, `[variance]`.
pub fn multiplicative(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    speckle(img, &[p[0].max(0.0).sqrt()], cx)
}

/// White noise on the chroma planes only, `[variance]`.
pub fn chroma(img: &Image, p: &[f64], cx: &mut OpContext<'_>) -> Result<Image> {
    let sigma = p[0].max(0.0).sqrt();
    let rng = &mut cx.rng;
    Ok(img.clone().map_pixels(|px| {
        let [y, cb, cr] = rgb_to_ycbcr(px);
        let ncb = (sigma * rng.gaussian()) as f32;
        let ncr = (sigma * rng.gaussian()) as f32;
        ycbcr_to_rgb([y, cb + ncb, cr + ncr])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamId};

    fn cx() -> OpContext<'static> {
        OpContext {
            rng: RngStream::new(7, StreamId::default()),
            assets: None,
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let img = Image::from_fn(8, 8, |x, y, c| ((x * 3 + y + c) % 10) as f32 / 10.0);
        assert_eq!(gaussian(&img, &[0.0], &mut cx()).unwrap(), img);
        assert_eq!(speckle(&img, &[0.0], &mut cx()).unwrap(), img);
        assert_eq!(impulse(&img, &[0.0], &mut cx()).unwrap(), img);
    }

    #[test]
    fn impulse_fraction_close_to_amount() {
        let img = Image::filled(100, 100, [0.5; 3]);
        let out = impulse(&img, &[0.1], &mut cx()).unwrap();
        let hits = out.data().iter().filter(|&&s| s != 0.5).count() as f64 / 30_000.0;
        assert!((hits - 0.1).abs() < 0.01, "{hits}");
    }

    #[test]
    fn chroma_noise_keeps_luma() {
        let img = Image::filled(16, 16, [0.4, 0.5, 0.6]);
        let out = chroma(&img, &[0.001], &mut cx()).unwrap();
        for (a, b) in img.data().chunks(3).zip(out.data().chunks(3)) {
            let ya = rgb_to_ycbcr([a[0], a[1], a[2]])[0];
            let yb = rgb_to_ycbcr([b[0], b[1], b[2]])[0];
            assert!((ya - yb).abs() < 1e-5);
        }
    }
}
