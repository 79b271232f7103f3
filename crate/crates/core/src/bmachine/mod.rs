mod circuit;
mod run;
mod spec;
mod state;

pub use circuit::{named_state, Circuit, Gate};
pub use run::{init_machine, run, run_with_trace, sample_shot, shot_rng, Counts, ShotResult};
pub use spec::{BiEntanglingGateSpec, KrausPair};
pub use state::{repair, Branch, Machine, PairState, PairingList, PSD_REPAIR};
