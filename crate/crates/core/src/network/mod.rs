//! Bag networks: per-instance layers, in-network pooling, post-pool classifier.

mod equivalence;
mod layer;
mod model_io;
pub(crate) mod net;
mod pooling;

pub use equivalence::{equivalence_check, equivalence_check_shared, probe_bags, PROBE_BAGS};
pub use layer::{Activation, Layer, LayerGrad};
pub use model_io::FORMAT_VERSION;
pub use net::{
    backward_bag, forward_bag, init_network, ArchKind, Architecture, ForwardTrace, Gradients,
    Network,
};
pub use pooling::{pool_backward, pool_forward, PoolKind};
