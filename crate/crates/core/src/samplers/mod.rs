//! Posterior draw generation.
//!
//! Every sampler derives one random stream per draw index from the master
//! seed, so draws can be produced in any order (or concurrently) and the
//! result, ordered by draw index, is identical regardless of worker count.

mod dp;
mod external;
mod gp;
mod pt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dp::{dp_posterior_draws, DpPosterior, DpSpec, Truncation};
pub use external::{ingest_external_draws, sniff_delimiter, DrawKind, ExternalDraws};
pub use gp::{gp_posterior_draws, GpPosterior, GpSpec, Kernel, KernelKind};
pub use pt::{
    default_depth, pt_posterior_draws, PolyaTreePosterior, PtPairPosterior, PtSpec, MAX_DEPTH,
};

/// Random stream for one draw: the master seed selects the key and the
/// stream id separates draws (and sub-draws within one).
pub fn draw_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-draw infimum dissimilarities `inf_{P0 in H0} d(P0, P_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfimumDrawSet {
    values: Vec<f64>,
    seed: u64,
}

impl InfimumDrawSet {
    pub fn new(values: Vec<f64>, seed: u64) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFiniteData {
                index: i,
                value: values[i],
            });
        }
        Ok(Self { values, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_draws(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `(min, lower median, max)`, `None` for an empty set.
    pub fn summary(&self) -> Option<(f64, f64, f64)> {
        if self.values.is_empty() {
            return None;
        }
        let s = self.sorted();
        let mid = s[s.len().div_ceil(2) - 1];
        Some((s[0], mid, s[s.len() - 1]))
    }
}
