//! Quench dynamics of disordered spinless-fermion chains and l1-norm
//! complementarity quantifiers (coherence, predictability, entanglement).
//!
//! The crate builds Anderson (`g = 0`) and interacting (`g != 0`) chain
//! Hamiltonians in fixed particle-number sectors, evolves initial states
//! exactly through a full eigendecomposition, evaluates global or windowed
//! quantifiers over a logarithmic time grid, averages them over disorder
//! realizations and classifies late-time behavior as saturated or
//! logarithmically drifting.
//!
//! Realizations run on rayon when the `parallel` feature is enabled (the
//! default); without it everything executes sequentially with identical
//! results.

pub mod cli;
pub mod detect;
pub mod error;
pub mod evolve;
pub mod experiment;
pub mod hamiltonian;
pub mod hilbert;
pub mod quantifiers;
pub mod states;

pub use error::{Error, Result};
pub use num_complex::Complex64;
