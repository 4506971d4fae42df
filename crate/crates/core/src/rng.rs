//! Counter-based random number streams.
//!
//! Every source of randomness in the crate is a [`Stream`] keyed by a 64-bit
//! value derived from `(seed, purpose, index...)` via [`derive_key`]. A
//! stream's output depends only on its key and draw counter, never on
//! scheduling, so simulations shard freely across threads and reproduce
//! bit-identically at any worker count.

/// Mix a 64-bit word (splitmix64 finalizer).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a stream key by folding the parts through the mixer. Equal part
/// lists give equal keys; distinct lists decorrelate.
pub fn derive_key(parts: &[u64]) -> u64 {
    let mut acc = 0x51_7c_c1_b7_27_22_0a_95u64;
    for &p in parts {
        acc = mix64(acc ^ p);
    }
    acc
}

/// A deterministic random stream: the n-th draw is a pure function of
/// `(key, n)`.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
    spare_gaussian: Option<f64>,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { key, counter: 0, spare_gaussian: None }
    }

    /// Stream for a specific purpose and index under a root seed.
    pub fn derived(seed: u64, purpose: u64, index: u64) -> Self {
        Stream::new(derive_key(&[seed, purpose, index]))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ mix64(self.counter));
        self.counter += 1;
        out
    }

    /// Uniform draw in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn uniform_usize(&mut self, n: usize) -> usize {
        // Modulo bias is < 2^-50 for the range sizes used here.
        (self.next_u64() % n as u64) as usize
    }

    /// Standard gaussian draw via Box-Muller; pairs are cached so consecutive
    /// draws cost one transform per two values.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let phi = crate::space::TAU * u2;
        self.spare_gaussian = Some(r * libm::sin(phi));
        r * libm::cos(phi)
    }
}
