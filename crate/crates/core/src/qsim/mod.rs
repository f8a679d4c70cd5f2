//! Dense statevector kernel: state preparation, gate application, marginal
//! probabilities and Haar-random unitaries.

mod gates;
mod haar;
pub(crate) mod kernels;
mod state;

pub use gates::GateMatrix;
pub use haar::{haar_unitary, HaarUnitary};
pub use state::{init_bell, Statevector, MAX_QUBITS};
pub(crate) use state::{marginal_from_amps, outcome_index};
