//! Classical simulation of bi-entangling quantum machines and noise
//! thresholds for universal gate sets.
//!
//! The crate is organised bottom-up:
//!
//! * [`qmath`] dense complex linear algebra, partial traces/transposes,
//!   Pauli expansions and entanglement measures.
//! * [`channels`] quantum operations with the Choi (Jamiolkowski) state as
//!   canonical representation, plus Kraus and Pauli-transfer views.
//! * [`thresholds`] gate symmetry groups, twirling, split separability and
//!   the depolarizing-CNOT certificate.
//! * [`octahedron`] single-qubit Clifford geometry and the related noise
//!   thresholds.
//! * [`bmachine`] the pairing-list Monte-Carlo simulator.
//! * [`dense_oracle`] brute-force density-matrix reference simulator.

pub mod bmachine;
pub mod channels;
pub mod convex;
pub mod dense_oracle;
mod error;
pub mod json;
pub mod octahedron;
pub mod qmath;
pub mod random;
pub mod thresholds;

pub use error::{Error, Result};

/// Version stamped into every JSON document produced by the crate.
pub const SCHEMA_VERSION: &str = "1";
