//! Counter-based random streams keyed by (seed, image, chain position).
//!
//! Every stream is a ChaCha8 keystream whose 256-bit key is the SHA-256 of
//! the triple, so streams are independent of scheduling order and of the
//! platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use sha2::{Digest, Sha256};

/// Identifies which image and which chain slot a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StreamId {
    pub image: u64,
    pub position: u32,
}

impl StreamId {
    pub fn new(image: u64, position: u32) -> Self {
        StreamId { image, position }
    }

    /// Stream for a textual image id (usually the file stem).
    pub fn for_image(image_id: &str, position: u32) -> Self {
        StreamId {
            image: image_key(image_id),
            position,
        }
    }

    pub fn at_position(self, position: u32) -> Self {
        StreamId { position, ..self }
    }
}

/// Stable 64-bit key for an image id.
pub fn image_key(image_id: &str) -> u64 {
    let digest = Sha256::digest(image_id.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"imdeg-rng-v1");
        hasher.update(seed.to_le_bytes());
        hasher.update(id.image.to_le_bytes());
        hasher.update(id.position.to_le_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        RngStream {
            seed,
            id,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// An independent child stream, e.g. for a sub-step of one operator.
    pub fn fork(&self, salt: u32) -> RngStream {
        let image = self.id.image ^ (salt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        RngStream::new(self.seed, StreamId::new(image, self.id.position))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform in `[lo, hi)`; returns `lo` when the interval is empty.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        if hi <= lo {
            return lo;
        }
        self.inner.random_range(lo..=hi)
    }

    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Poisson draw; `lambda <= 0` yields 0.
    pub fn poisson(&mut self, lambda: f64) -> f64 {
        if !(lambda > 0.0) {
            return 0.0;
        }
        match Poisson::new(lambda) {
            Ok(d) => d.sample(&mut self.inner),
            Err(_) => lambda,
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `n` standard-normal samples from `rng`.
pub fn draw_gaussian(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gaussian()).collect()
}
