//! Dense networks, the Gaussian actor–critic, Adam and the weights format.

pub mod adam;
mod gemm;
pub mod mlp;
pub mod policy;
pub mod weights;

pub use adam::{adam_step, AdamState};
pub use mlp::{ForwardCache, Gradients, Mlp};
pub use policy::{log_prob_and_entropy, GaussianPolicy, PolicyMeta, ACT_DIM, OBS_DIM};
