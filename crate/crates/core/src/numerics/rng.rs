//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and
//! positioned on its own 64-bit stream id, so each `(seed, stream_id)` pair
//! yields an independent sequence and chains can be created in any order
//! or on any thread without changing their output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    /// Number of variates handed out so far (normals and uniforms alike).
    counter: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            counter: 0,
            inner,
        }
    }

    /// Stream for chain `chain` of repeat `repeat` when each repeat owns
    /// `chains_per_repeat` consecutive stream ids.
    pub fn for_chain(seed: u64, repeat: usize, chain: usize, chains_per_repeat: usize) -> Self {
        Self::new(seed, (repeat * chains_per_repeat + chain) as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.counter += 1;
        self.inner.sample(StandardNormal)
    }

    /// Fills `out` with i.i.d. standard normals; advances the counter by `out.len()`.
    #[inline]
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.inner.sample(StandardNormal);
        }
        self.counter += out.len() as u64;
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.counter += 1;
        self.inner.random::<f64>()
    }

    /// Laplace(loc, scale) by inversion of one uniform.
    pub fn laplace(&mut self, loc: f64, scale: f64) -> f64 {
        let u = self.uniform() - 0.5;
        loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}

/// `d` independent standard normal variates. Advances the stream counter by `d`.
pub fn standard_normal_vector(rng: &mut RngStream, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    rng.fill_normal(&mut v);
    v
}
