//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, trajectory, purpose, position)`, so results
//! do not depend on how trajectories are scheduled across workers. ChaCha8 is
//! seekable, which gives the counter-based addressing directly.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Offset added to signed clock positions so that they map onto word positions.
const CLOCK_ORIGIN: i64 = 1 << 48;

/// What a stream is used for; distinct purposes never share random words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    InitialState = 0,
    Noise = 1,
    Jumps = 2,
}

/// A random stream for one trajectory and purpose.
#[derive(Clone, Debug)]
pub struct TrajectoryStream {
    rng: ChaCha8Rng,
}

impl TrajectoryStream {
    pub fn new(seed: u64, trajectory: u64, kind: StreamKind) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory.wrapping_mul(4).wrapping_add(kind as u64));
        Self { rng }
    }

    /// Position the stream at slot `index`, where each slot holds `words` 32-bit words.
    pub fn seek(&mut self, index: u64, words: u64) {
        self.rng.set_word_pos(index as u128 * words as u128);
    }

    /// Position at a signed clock tick, each tick holding `words` words.
    pub fn seek_clock(&mut self, tick: i64, words: u64) {
        self.seek((tick + CLOCK_ORIGIN) as u64, words);
    }

    /// Uniform on the open interval (0, 1); consumes two words.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1); consumes two words.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A fair sign, ±1; consumes two words.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.rng.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Two independent standard normals by Box-Muller; always consumes four words.
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let r = (-2.0 * self.uniform_open().ln()).sqrt();
        let (s, c) = (TAU * self.uniform()).sin_cos();
        (r * c, r * s)
    }
}

impl RngCore for TrajectoryStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeking_matches_sequential_reads() {
        let mut a = TrajectoryStream::new(7, 3, StreamKind::Noise);
        a.seek_clock(-5, 4);
        let seq: Vec<(f64, f64)> = (0..10).map(|_| a.normal_pair()).collect();
        for (i, expect) in seq.iter().enumerate() {
            let mut b = TrajectoryStream::new(7, 3, StreamKind::Noise);
            b.seek_clock(-5 + i as i64, 4);
            assert_eq!(b.normal_pair(), *expect);
        }
    }

    #[test]
    fn streams_are_distinct() {
        let mut a = TrajectoryStream::new(1, 0, StreamKind::Noise);
        let mut b = TrajectoryStream::new(1, 1, StreamKind::Noise);
        let mut c = TrajectoryStream::new(1, 0, StreamKind::InitialState);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert!(x != y && x != z && y != z);
    }

    #[test]
    fn normal_moments() {
        let mut s = TrajectoryStream::new(11, 0, StreamKind::Noise);
        let n = 200_000;
        let (mut m1, mut m2, mut cross) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b) = s.normal_pair();
            m1 += a + b;
            m2 += a * a + b * b;
            cross += a * b;
        }
        let n2 = 2.0 * n as f64;
        assert!((m1 / n2).abs() < 5.0 / n2.sqrt());
        assert!((m2 / n2 - 1.0).abs() < 5.0 * (2.0 / n2).sqrt());
        assert!((cross / n as f64).abs() < 5.0 / (n as f64).sqrt());
    }
}
