//! Operator implementations. Every function takes the clean image, the
//! parameter tuple for one severity level and an [`OpContext`]; the caller
//! clamps the result into `[0, 1]`.

use std::path::Path;

use crate::error::Result;
use crate::image::Image;
use crate::rng::RngStream;

pub mod colorspace;
pub mod kernels;

pub(crate) mod blur;
pub(crate) mod codec;
pub(crate) mod noise;
pub(crate) mod photometric;
pub(crate) mod sensor;
pub(crate) mod spatial;
pub(crate) mod weather;

pub struct OpContext<'a> {
    pub rng: RngStream,
    pub assets: Option<&'a Path>,
}

pub type OpFn = fn(&Image, &[f64], &mut OpContext<'_>) -> Result<Image>;
