//! Hard instances: the chain quadratic, its lazily rotated version for
//! deterministic algorithms, and the channel composition built against a
//! given algorithm.

mod builder;
mod chain;
mod rotation;
pub mod tridiag;

pub use builder::{
    build_channel_instance, ChannelAdversaryConfig, ChannelBuild, ChannelDiagnostics, SqrtOracle, WMode,
    T_MAX_DEFAULT_W, W_NORM_MIN,
};
pub use chain::{
    chain_k, chain_q, chain_spectrum_check, msqrt_apply, rotated_minimizer, ChainMetric, ChainParams,
    HardQuadratic, Metric, RotatedChainMetric, SPECTRUM_CHECK_MAX_T,
};
pub use rotation::{reply_relative_error, RotatedQuadratic, RotationOracle};

/// The chain quadratic as an oracle (it is a pure function).
pub fn chain_quadratic_oracle(hq: &HardQuadratic) -> HardQuadratic {
    hq.clone()
}
