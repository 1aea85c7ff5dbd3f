//! Procedural stand-ins for natural photographs: smooth colored backgrounds
//! with 1/f-like texture, soft-edged objects and fine grain. Used when no
//! real image set is available.

use crate::calibration::NamedImage;
use crate::image::Image;
use crate::ops::kernels::{gaussian_blur, plasma_field};
use crate::rng::{RngStream, StreamId};

fn palette(rng: &mut RngStream) -> [f32; 3] {
    [0; 3].map(|_| rng.uniform_in(0.1, 0.9) as f32)
}

/// One synthetic scene determined by `(seed, id)`.
pub fn natural_image(width: usize, height: usize, seed: u64, id: &str) -> Image {
    let mut rng = RngStream::new(seed, StreamId::for_image(id, 0));
    let (w, h) = (width, height);

    // Background: two colors blended by a low-frequency field, plus texture.
    let (c0, c1) = (palette(&mut rng), palette(&mut rng));
    let blend = plasma_field(w, h, 2.2, &mut rng);
    let texture: Vec<Vec<f32>> = (0..3).map(|_| plasma_field(w, h, 1.4, &mut rng)).collect();
    let tilt = rng.uniform_in(-0.25, 0.25) as f32;
    let mut img = Image::from_fn(w, h, |x, y, c| {
        let i = y * w + x;
        let t = blend[i];
        let base = c0[c] * (1.0 - t) + c1[c] * t;
        let shade = tilt * (y as f32 / h as f32 - 0.5);
        base + shade + 0.18 * (texture[c][i] - 0.5)
    });

    // Soft-edged ellipses and rectangles as foreground objects.
    let objects = 3 + rng.below(5);
    for _ in 0..objects {
        let color = palette(&mut rng);
        let cx = rng.uniform_in(0.0, w as f64) as f32;
        let cy = rng.uniform_in(0.0, h as f64) as f32;
        let rx = rng.uniform_in(0.05, 0.3) as f32 * w as f32;
        let ry = rng.uniform_in(0.05, 0.3) as f32 * h as f32;
        let square = rng.uniform() < 0.4;
        let edge = rng.uniform_in(0.02, 0.15) as f32;
        let stripes = rng.uniform_in(0.0, 0.12) as f32;
        let freq = rng.uniform_in(0.1, 0.6) as f32;
        for y in 0..h {
            for x in 0..w {
                let dx = (x as f32 - cx) / rx;
                let dy = (y as f32 - cy) / ry;
                let d = if square { dx.abs().max(dy.abs()) } else { (dx * dx + dy * dy).sqrt() };
                let alpha = ((1.0 - d) / edge).clamp(0.0, 1.0);
                if alpha > 0.0 {
                    let pattern = stripes * ((x as f32 + y as f32) * freq).sin();
                    let px = img.pixel(x, y);
                    let v = [0, 1, 2].map(|c| px[c] * (1.0 - alpha) + (color[c] + pattern) * alpha);
                    img.set_pixel(x, y, v);
                }
            }
        }
    }

    let mut img = gaussian_blur(&img, 0.6);
    for s in img.data_mut() {
        *s += 0.01 * rng.gaussian() as f32;
    }
    img.map(|v| v.clamp(0.02, 0.98))
}

/// `n` scenes with ids `synth_0000`, `synth_0001`, ...
pub fn natural_set(n: usize, width: usize, height: usize, seed: u64) -> Vec<NamedImage> {
    (0..n)
        .map(|i| {
            let id = format!("synth_{i:04}");
            let image = natural_image(width, height, seed, &id);
            NamedImage::new(id, image)
        })
        .collect()
}
