//! Dense-network numerical core in double precision.

mod activation;
mod adam;
mod dense;
mod dropout;
mod gradcheck;
mod params;

pub use activation::{activate, activation_derivative, Activation, SeluConstants, SELU};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use dense::{dense_backward, dense_forward, DenseCache, DenseLayer};
pub use dropout::{dropout_apply, dropout_with_rng, DropoutSpec};
pub use gradcheck::{central_difference, gradient_check, GradCheckReport, GRADCHECK_FLOOR};
pub use params::{Parameters, flatten, assign_flat};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG owned by one training job or sampling stream.
pub type JobRng = ChaCha8Rng;

/// Independent deterministic stream `stream` of `seed`.
pub fn job_rng(seed: u64, stream: u64) -> JobRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
