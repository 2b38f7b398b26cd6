//! Winner-take-all Hebbian clustering of multi-agent position streams and a
//! recurrent forecaster over the resulting cluster-radius state vectors.
//!
//! The pipeline is:
//!
//! 1. [`data`] loads or synthesizes frames of 2-D agent positions and cuts
//!    them into fixed-length chunks.
//! 2. [`set_to_cluster`] learns a codebook of centroids with a Hebbian rule and
//!    encodes each frame into a [`StateVector`] of per-neuron radii.
//! 3. [`forecaster`] observes the first half of a chunk and rolls the state
//!    vectors forward autoregressively.
//! 4. [`metrics`] scores clusterings and forecasts; [`kmeans`] provides the
//!    Lloyd reference.

pub mod bench;
#[cfg(feature = "cli")]
pub mod cli;
pub mod data;
pub mod error;
pub mod forecaster;
pub mod kmeans;
pub mod metrics;
pub mod nn;
pub mod report;
pub mod set_to_cluster;
pub mod types;

pub use error::{Error, Result};
pub use types::{Chunk, Cluster, ClusterConfig, Codebook, Frame, Point, Split, StateVector};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used everywhere a seed is accepted.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
