//! Quasiprobabilistic simulation of an ideal n-qubit state transfer using a noisy
//! interconnect.
//!
//! The identity channel is decomposed as
//!
//! ```text
//! I = (1/F) E_E(C) - (1/F - 1) E_V(M)
//! ```
//!
//! where `E_E(C)` is a twirl of the noisy channel `C` that yields the depolarizing
//! channel `D_F` with `F` the entanglement fidelity of `C`, and `E_V(M)` twirls a
//! computational-basis measure-and-prepare channel into `D_0`. Sampling the two
//! branches with probabilities proportional to the coefficient magnitudes and
//! reweighting single-shot outcomes by `kappa * sign` gives an unbiased estimator of
//! ideal expectation values with overhead `kappa = 2/F - 1`.
//!
//! Module map:
//!
//! - [`pauli`]: phase-tracked Pauli operators and the partition of the non-identity
//!   Paulis into maximally commuting sets with their diagonalizing unitaries.
//! - [`state`], [`channel`]: density matrices and CPTP maps (superoperator, chi,
//!   Choi, Kraus, Pauli transfer matrix).
//! - [`twirl`]: unitary ensembles and channel twirls.
//! - [`qpd`]: measure-and-prepare channel, the decomposition plan, the Monte Carlo
//!   estimator and the overhead / bias bounds.
//! - [`noise`]: incoherent-plus-coherent noise model, teleportation channels and
//!   SWAP-degraded resource states.
//! - [`calibration`]: entanglement-fidelity estimation from survival statistics.
//! - [`experiment`]: config-driven simulation studies with CSV output.
//! - [`verify`]: the invariant suite behind `qpdwire verify`.
//!
//! # Conventions
//!
//! Qubit 0 is the leftmost tensor factor, so it is the most significant bit of a
//! computational basis index. A Pauli index `a` packs the X bits in the low half and
//! the Z bits in the high half: `a = x + 2^n z`, where bit `i` of `x` (or `z`) refers
//! to qubit `i`. Channel superoperators act on column-stacked density matrices.

#![forbid(unsafe_code)]

pub mod calibration;
pub mod channel;
pub mod clifford;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod linalg;
pub mod noise;
pub mod pauli;
pub mod qpd;
pub mod rng;
pub mod state;
pub mod twirl;
pub mod verify;

pub use channel::{Channel, Superoperator};
pub use error::{QpdError, Result};
pub use exec::Execution;
pub use pauli::{CommutingPartition, PauliOperator};
pub use qpd::{QpdPlan, ShotRecord};
pub use state::DensityMatrix;
pub use twirl::{EnsembleLabel, UnitaryEnsemble};
