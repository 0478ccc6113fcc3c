//! Deterministic random streams.
//!
//! Every stochastic routine in the library draws from a [`UniformStream`],
//! which decouples the algorithm from the generator: production code uses a
//! counter-based ChaCha8 stream keyed by `(seed, labels..., index)`, tests can
//! substitute a fixed sequence. Because each (dataset, method, replica) task
//! derives its own key, parallel scheduling cannot change any result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of i.i.d. uniforms on `[0, 1)`.
pub trait UniformStream {
    fn next_f64(&mut self) -> f64;

    /// Uniform index in `[0, n)` derived from one uniform draw. Defined via
    /// the floor map so a stubbed stream fully determines the output.
    fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let u = self.next_f64();
        ((u * n as f64) as usize).min(n - 1)
    }

    /// Uniform draw on `[low, high]`; degenerate bounds return `low`.
    fn next_range(&mut self, low: f64, high: f64) -> f64 {
        low + self.next_f64() * (high - low)
    }
}

/// ChaCha8-backed stream keyed by a 64-bit value. ChaCha is a counter-mode
/// generator, so equal keys give equal sequences on every platform.
#[derive(Debug, Clone)]
pub struct DetRng {
    inner: ChaCha8Rng,
}

impl DetRng {
    pub fn from_key(key: u64) -> Self {
        DetRng {
            inner: ChaCha8Rng::seed_from_u64(key),
        }
    }

    /// Derive the stream for one task: the labels and index are folded into
    /// the seed with FNV-1a, which is byte-order stable.
    pub fn for_task(seed: u64, labels: &[&str], index: u64) -> Self {
        Self::from_key(task_key(seed, labels, index))
    }
}

impl UniformStream for DetRng {
    fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }
}

/// FNV-1a over the task coordinates.
pub fn task_key(seed: u64, labels: &[&str], index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x00000100000001b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(&seed.to_le_bytes());
    for label in labels {
        eat(label.as_bytes());
        eat(&[0xff]); // separator so ("ab","c") != ("a","bc")
    }
    eat(&index.to_le_bytes());
    h
}

/// Fixed sequence of uniforms for tests; panics when exhausted.
#[derive(Debug, Clone)]
pub struct SliceStream {
    values: Vec<f64>,
    pos: usize,
}

impl SliceStream {
    pub fn new(values: &[f64]) -> Self {
        SliceStream {
            values: values.to_vec(),
            pos: 0,
        }
    }
}

impl UniformStream for SliceStream {
    fn next_f64(&mut self) -> f64 {
        let v = *self
            .values
            .get(self.pos)
            .expect("SliceStream exhausted: test consumed more uniforms than stubbed");
        self.pos += 1;
        v
    }
}
