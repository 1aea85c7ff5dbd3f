//! In-memory RGB image and 8-bit file I/O.
//!
//! Samples are `f32` in `[0, 1]`, row-major, interleaved RGB. Conversion to
//! and from 8-bit happens only at file boundaries.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};

/// Number of channels every [`Image`] carries.
pub const CHANNELS: usize = 3;

/// Codec identification recorded in manifests. Bump together with the
/// `image` dependency pin.
pub const CODEC_VERSION: &str = "image-rs/0.25 (png, jpeg baseline)";

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

/// Output encoding for [`save_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Png,
    /// Baseline JPEG, quality 1..=100.
    Jpeg(u8),
}

impl FileFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FileFormat::Png => "png",
            FileFormat::Jpeg(_) => "jpg",
        }
    }
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty image {width}x{height}")));
        }
        let expected = width * height * CHANNELS;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "buffer of {} samples for {width}x{height}x{CHANNELS} image (expected {expected})",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Uniformly filled image. Panics on zero dimensions.
    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Image {
            width,
            height,
            data,
        }
    }

    /// Builds an image from a per-sample function `f(x, y, channel)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..CHANNELS {
                    data.push(f(x, y, c));
                }
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    /// Interleaves three planes of `width * height` samples.
    pub fn from_planes(width: usize, height: usize, planes: [Vec<f32>; 3]) -> Result<Self> {
        let n = width * height;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::Shape("plane length does not match dimensions".into()));
        }
        let mut data = Vec::with_capacity(n * CHANNELS);
        for i in 0..n {
            data.push(planes[0][i]);
            data.push(planes[1][i]);
            data.push(planes[2][i]);
        }
        Image::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * CHANNELS + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = self.index(x, y, 0);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = self.index(x, y, 0);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Splits into three single-channel planes.
    pub fn planes(&self) -> [Vec<f32>; 3] {
        let n = self.width * self.height;
        let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for px in self.data.chunks_exact(CHANNELS) {
            planes[0].push(px[0]);
            planes[1].push(px[1]);
            planes[2].push(px[2]);
        }
        planes
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Clamps every sample into `[0, 1]`; NaN becomes 0.
    pub fn clamp(mut self) -> Self {
        for s in &mut self.data {
            *s = if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) };
        }
        self
    }

    pub fn map(mut self, mut f: impl FnMut(f32) -> f32) -> Self {
        for s in &mut self.data {
            *s = f(*s);
        }
        self
    }

    /// Maps each RGB pixel through `f`.
    pub fn map_pixels(mut self, mut f: impl FnMut([f32; 3]) -> [f32; 3]) -> Self {
        for px in self.data.chunks_exact_mut(CHANNELS) {
            let out = f([px[0], px[1], px[2]]);
            px.copy_from_slice(&out);
        }
        self
    }

    /// 8-bit representation, `round(255 * s)` after clamping.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&s| to_u8(s)).collect()
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Image::new(width, height, bytes.iter().map(|&b| b as f32 / 255.0).collect())
    }

    /// The image as it would read back from a lossless 8-bit file.
    pub fn quantize8(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&s| to_u8(s) as f32 / 255.0).collect(),
        }
    }
}

#[inline]
fn to_u8(s: f32) -> u8 {
    let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) };
    (s * 255.0).round() as u8
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Decodes PNG or JPEG bytes. Grayscale is replicated, alpha dropped.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Format(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        Some(other) => return Err(Error::Format(format!("{other:?} is not PNG or JPEG"))),
        None => return Err(Error::Format("unrecognised image signature".into())),
    }
    let decoded = reader.decode().map_err(|e| Error::Format(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    Image::from_rgb8(w as usize, h as usize, rgb.as_raw())
}

pub fn encode_image(img: &Image, format: FileFormat) -> Result<Vec<u8>> {
    let bytes = img.to_rgb8();
    let (w, h) = (img.width as u32, img.height as u32);
    let mut out = Vec::new();
    match format {
        FileFormat::Png => PngEncoder::new(&mut out)
            .write_image(&bytes, w, h, ExtendedColorType::Rgb8)
            .map_err(|e| Error::Format(e.to_string()))?,
        FileFormat::Jpeg(quality) => {
            if !(1..=100).contains(&quality) {
                return Err(Error::Argument(format!("jpeg quality {quality} outside 1..=100")));
            }
            JpegEncoder::new_with_quality(&mut out, quality)
                .write_image(&bytes, w, h, ExtendedColorType::Rgb8)
                .map_err(|e| Error::Format(e.to_string()))?
        }
    }
    Ok(out)
}

pub fn save_image(img: &Image, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(img, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_dimensions() {
        assert!(matches!(Image::new(0, 0, vec![]), Err(Error::Shape(_))));
        assert!(Image::new(2, 2, vec![0.0; 11]).is_err());
    }

    #[test]
    fn eight_bit_mapping() {
        let img = Image::from_rgb8(1, 1, &[128, 0, 64]).unwrap();
        assert_eq!(img.data(), &[128.0 / 255.0, 0.0, 64.0 / 255.0]);
        let white = Image::from_rgb8(1, 1, &[255, 255, 255]).unwrap();
        assert!(white.data().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn png_round_trip_in_memory() {
        let img = Image::from_fn(5, 3, |x, y, c| ((x * 31 + y * 17 + c * 7) % 256) as f32 / 255.0);
        let back = decode_image(&encode_image(&img, FileFormat::Png).unwrap()).unwrap();
        assert_eq!(back, img.quantize8());
    }

    #[test]
    fn rejects_non_image_bytes() {
        assert!(matches!(decode_image(b"not an image at all"), Err(Error::Format(_))));
    }

    #[test]
    fn jpeg_quality_bounds() {
        let img = Image::filled(8, 8, [0.5; 3]);
        assert!(encode_image(&img, FileFormat::Jpeg(0)).is_err());
        assert!(encode_image(&img, FileFormat::Jpeg(101)).is_err());
        assert!(encode_image(&img, FileFormat::Jpeg(1)).is_ok());
    }

    #[test]
    fn clamp_handles_nan() {
        let img = Image::new(1, 1, vec![f32::NAN, -0.5, 1.5]).unwrap().clamp();
        assert_eq!(img.data(), &[0.0, 0.0, 1.0]);
    }
}
