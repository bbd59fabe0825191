//! The classification network: declarative spec, trainable instance and
//! checkpoint files.

mod checkpoint;
mod network;
mod spec;

pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use network::{argmax, train_step, Network, Trace};
pub use spec::{Clause, LayerSpec, NetworkSpec, Preset, CANONICAL_HIDDEN_WIDTH, DROPOUT_P};

/// Builds a single-precision network from `spec`, seeded by `seed`.
pub fn build_network(spec: &NetworkSpec, seed: u64) -> crate::Result<Network<f32>> {
    Network::build(spec, seed)
}

/// Shorthand for [`NetworkSpec::preset`].
pub fn spec_preset(name: &str) -> crate::Result<NetworkSpec> {
    NetworkSpec::preset(name)
}
