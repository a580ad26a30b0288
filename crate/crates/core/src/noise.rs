//! Reproducible Gaussian increments.
//!
//! Generator: ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(master_seed)` and switched to stream `trajectory_index`.
//! Normals are drawn with the ziggurat sampler `rand_distr::StandardNormal`.
//! Each step consumes exactly four normals in the order ζ₁, ζ₂, ζ₃, ζ₄.
//! This pairing is fixed for the 0.x series; changing either half changes
//! every simulated path.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Source of the four standard-normal draws used by one step.
pub trait NormalSource {
    fn next4(&mut self) -> [f64; 4];
}

/// Identifies one independent noise substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseStream {
    pub master_seed: u64,
    pub trajectory_index: u64,
}

impl NoiseStream {
    pub const fn new(master_seed: u64, trajectory_index: u64) -> Self {
        Self {
            master_seed,
            trajectory_index,
        }
    }

    pub fn gaussian(&self) -> GaussianStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trajectory_index);
        GaussianStream { rng }
    }
}

/// Standard-normal draws from one [`NoiseStream`].
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn next_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl NormalSource for GaussianStream {
    fn next4(&mut self) -> [f64; 4] {
        let z1 = self.next_normal();
        let z2 = self.next_normal();
        let z3 = self.next_normal();
        let z4 = self.next_normal();
        [z1, z2, z3, z4]
    }
}

/// Always returns zeros; turns the Milstein step into its `ζ = 0` variant.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NormalSource for ZeroNoise {
    fn next4(&mut self) -> [f64; 4] {
        [0.0; 4]
    }
}
