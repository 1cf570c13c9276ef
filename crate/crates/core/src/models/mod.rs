//! Walk-network and spin-model engines with their exact oracles.

pub mod mc;
pub mod network;
pub mod phi4;
pub mod repcheck;
pub mod tiny;
pub mod walk;
pub mod wick;

pub use mc::{McEstimate, Tally};
pub use network::{star_mc, watermelon_mc, NetworkParams};
pub use phi4::{phi4_mc, phi4_onesite_oracle, OneSiteMoment, Phi4Bundle, Phi4Params, SpinConfig};
pub use repcheck::{representation_check, CheckLine, RepresentationReport};
pub use tiny::{wsaw_tiny_oracle, TinyOracle};
pub use walk::{intersection_local_time, simulate_walk, WalkPath};
pub use wick::wick_permanent;
