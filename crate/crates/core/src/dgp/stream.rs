//! Counter-based random streams.
//!
//! Every `(seed, rep, purpose)` triple keys a ChaCha8 generator and the unit
//! index selects its stream, so any draw can be reproduced without replaying
//! the draws that precede it in some other order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numkern::std_normal_quantile;

/// What a stream is used for; distinct purposes never share draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    UnitParams = 1,
    Regressor = 2,
    Noise = 3,
    GroupSizes = 4,
    GroupEffect = 5,
    Shuffle = 6,
}

pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64, rep: u64, unit: u64, purpose: Purpose) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&rep.to_le_bytes());
        key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(unit);
        Stream(rng)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal by inversion.
    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform())
    }

    /// χ² with `df` degrees of freedom as a sum of squared normals.
    pub fn chisq(&mut self, df: u32) -> f64 {
        (0..df).map(|_| self.normal().powi(2)).sum()
    }

    pub fn rng(&mut self) -> &mut impl Rng {
        &mut self.0
    }
}
