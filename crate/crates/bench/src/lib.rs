//! Shared fixtures for the benchmarks.

use imdeg_core::image::Image;
use imdeg_core::synth::natural_image;

/// Side length used by the per-image benchmarks.
pub const SIDE: usize = 224;

/// A deterministic procedural image and a lightly perturbed copy of it.
pub fn image_pair(side: usize) -> (Image, Image) {
    let a = natural_image(side, side, 11, "bench_a");
    let b = natural_image(side, side, 12, "bench_b");
    let mixed = a.data().iter().zip(b.data()).map(|(x, y)| 0.9 * x + 0.1 * y).collect();
    let b = Image::new(side, side, mixed).expect("same shape");
    (a, b)
}
