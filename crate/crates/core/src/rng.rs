//! Counter-based random number generation.
//!
//! Every consumer of randomness in this crate draws from a [`Stream`]: the
//! Philox 4x32-10 block cipher keyed by a 64-bit seed, with the 128-bit
//! counter split into a 64-bit stream id and a 64-bit block index. A stream's
//! output is a pure function of `(seed, stream id, draw index)`, so per-particle
//! streams are independent and reproducible no matter how work is scheduled
//! across threads.

/// Philox 4x32 round multipliers and Weyl key increments.
const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

const ROUNDS: usize = 10;

/// Philox 4x32-10 keyed by a 64-bit seed.
///
/// [`block`](Philox4x32::block) maps a 128-bit counter to 128 bits of output;
/// distinct counters give independent blocks under the same key.
#[derive(Debug, Clone, Copy)]
pub struct Philox4x32 {
    key: [u32; 2],
}

impl Philox4x32 {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    #[inline]
    fn round(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
        let p0 = u64::from(M0) * u64::from(ctr[0]);
        let p1 = u64::from(M1) * u64::from(ctr[2]);
        let (lo0, hi0) = (p0 as u32, (p0 >> 32) as u32);
        let (lo1, hi1) = (p1 as u32, (p1 >> 32) as u32);
        [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0]
    }

    /// One 10-round block: counter in, four words out.
    #[inline]
    pub fn block(&self, mut ctr: [u32; 4]) -> [u32; 4] {
        let mut key = self.key;
        ctr = Self::round(ctr, key);
        for _ in 1..ROUNDS {
            key[0] = key[0].wrapping_add(W0);
            key[1] = key[1].wrapping_add(W1);
            ctr = Self::round(ctr, key);
        }
        ctr
    }
}

/// Derive an independent sub-seed from `(seed, tag)`.
///
/// Used to give separate purposes (weight draws, resampler draws, pilot draws,
/// ...) disjoint key spaces. The counter's high word is pinned to `u32::MAX`,
/// which [`Stream`] never reaches for stream ids below `2^32`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let out = Philox4x32::new(seed).block([tag as u32, (tag >> 32) as u32, W0, u32::MAX]);
    u64::from(out[0]) | (u64::from(out[1]) << 32)
}

/// A sequential view of one counter-based stream.
///
/// `Stream::new(seed, s)` always yields the same draw sequence for the same
/// `(seed, s)`, independent of any other stream.
#[derive(Debug, Clone)]
pub struct Stream {
    cipher: Philox4x32,
    stream: u64,
    block: u64,
    buf: [u32; 4],
    pos: usize,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            cipher: Philox4x32::new(seed),
            stream,
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }

    #[inline]
    fn refill(&mut self) {
        self.buf = self.cipher.block([
            self.block as u32,
            (self.block >> 32) as u32,
            self.stream as u32,
            (self.stream >> 32) as u32,
        ]);
        self.block = self.block.wrapping_add(1);
        self.pos = 0;
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        if self.pos == 4 {
            self.refill();
        }
        let word = self.buf[self.pos];
        self.pos += 1;
        word
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let lo = self.next_u32();
        let hi = self.next_u32();
        u64::from(lo) | (u64::from(hi) << 32)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn next_f64_open_closed(&mut self) -> f64 {
        1.0 - self.next_f64()
    }

    /// Uniform index in `[0, n)` by 128-bit fixed-point multiply.
    ///
    /// The selection bias is below `n / 2^64`, irrelevant for any feasible `n`,
    /// and the draw consumes exactly one `u64` so stream offsets stay fixed.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }
}

impl rand_core::RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        Stream::next_u32(self)
    }

    fn next_u64(&mut self) -> u64 {
        Stream::next_u64(self)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(4) {
            let word = Stream::next_u32(self).to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
