use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the simulation and learning core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A rejection sampler gave up.
    #[error("placement infeasible: {what} after {attempts} consecutive rejections")]
    Infeasible { what: &'static str, attempts: usize },

    /// Parameters or shapes that violate a documented constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or incompatible weights blob.
    #[error("weights error: {0}")]
    Weights(String),

    /// A gradient cache used after the parameters it was computed with changed.
    #[error("stale activation cache: computed at parameter generation {cache}, network is at {net}")]
    StaleCache { cache: u64, net: u64 },

    /// Loss or parameters went NaN/Inf.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Failure reported by a caller-supplied sink (checkpoints, logs).
    #[error("sink error: {0}")]
    Sink(String),
}
