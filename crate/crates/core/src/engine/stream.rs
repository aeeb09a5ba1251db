//! Reproducible random streams.
//!
//! A stream is identified by (seed, stream_id): identical pairs reproduce
//! identical sequences, distinct stream ids are statistically independent.
//! Chunked generation derives one stream per (purpose, source or detector,
//! chunk index) so parallel workers never share generator state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// A fresh independent stream with the same seed.
    pub fn derive(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RandomStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    #[inline]
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Stream-id allocation. The high byte tags the purpose, the next bytes the
/// source or detector, and the low 40 bits the chunk index.
pub(crate) mod ids {
    pub const PURPOSE_GENERATE: u64 = 1;
    pub const PURPOSE_LOSS: u64 = 2;
    pub const PURPOSE_CLICKS: u64 = 3;
    pub const PURPOSE_DARKS: u64 = 4;
    pub const PURPOSE_ROUTING: u64 = 5;
    pub const PURPOSE_WAVEPACKET: u64 = 6;

    pub fn stream_id(purpose: u64, entity: u32, chunk: u64) -> u64 {
        debug_assert!(chunk < (1 << 40));
        (purpose << 56) | ((entity as u64) << 40) | chunk
    }
}
