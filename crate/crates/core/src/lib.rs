//! Minimal classical and quantum factorizations of finite classical channels.
//!
//! A channel `P(y|x)` factorizes through an intermediate variable when inputs
//! can be grouped into classes that share an output distribution. The
//! [`channel`] module finds the coarsest such grouping. The [`qfactor`]
//! module replaces the class label with a quantum signal state measured by a
//! POVM and compares the von Neumann entropy of the signal ensemble with the
//! Shannon entropy of the classical label. [`phase`] and [`casestudy`] cover
//! two worked settings: phases of qubit signal states, and a qutrit family
//! whose entropy minimum is attained by a mixed state.

pub mod casestudy;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod phase;
pub mod qfactor;
pub mod sampling;

pub use channel::{
    causal_factorization, causal_partition, classical_fidelity, pushforward, shannon_entropy,
    verify_factorization, Channel, Distribution, Factorization, Label, Partition,
};
pub use error::{Error, Result};
pub use linalg::{eig_hermitian, psd_sqrt, purity, ComplexMatrix};
pub use qfactor::{
    advantage, average_state, g0_construct, merge, quantum_fidelity, verify_qfactorization,
    von_neumann_entropy, DensityMatrix, Ensemble, Povm, PureState, QFactorization,
};
