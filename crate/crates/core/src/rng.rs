//! Seeded random streams.
//!
//! Every consumer (placement, channel, each node's mobility and protocol
//! logic) draws from its own ChaCha stream derived from the run seed, so
//! adding draws in one subsystem never perturbs another.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::NodeId;

/// Identifies an independent random stream within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement,
    Channel,
    Traffic,
    Mobility(NodeId),
    Protocol(NodeId),
    /// Free-form stream for tools and tests.
    Custom(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::Channel => 2,
            Stream::Traffic => 3,
            Stream::Mobility(n) => (1 << 32) | u64::from(n.0),
            Stream::Protocol(n) => (2 << 32) | u64::from(n.0),
            Stream::Custom(k) => (3 << 32) ^ k,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let stream = stream.id();
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SimRng {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform draw in `[lo, hi]`; returns `lo` when the interval is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            lo
        } else {
            lo + (hi - lo) * self.unit()
        }
    }

    /// Uniform draw in the half-open interval `(lo, hi]`.
    pub fn uniform_open_closed(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            hi
        } else {
            hi - (hi - lo) * self.unit()
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.inner.gen_range(0..len)
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
