//! Numerical estimation of parametrized Gabor wave front sets and their
//! propagation under semigroups `e^{-t q^w(x, D)}` generated by quadratic
//! forms `q(x, xi) = <(x, xi), Q (x, xi)>` with `Re Q >= 0`.
//!
//! The crate is organised bottom up:
//!
//! * [`symplectic`] dense linear algebra on phase space (`J`, `exp`, kernels).
//! * [`directions`] finite direction samples standing in for closed cones.
//! * [`quadham`] Hamilton maps, singular spaces and predicted sets.
//! * [`tfa`] sampled signals, windows, STFT and decay-order estimation.
//! * [`propagators`] Gaussian calculus and grid propagators.
//! * [`harness`] end-to-end inclusion experiments.
//! * [`io`] file formats and canonical JSON.

pub mod directions;
pub mod error;
pub mod harness;
pub mod io;
pub mod propagators;
pub mod quadham;
pub mod spectral;
pub mod symplectic;
pub mod tfa;

pub use directions::DirectionSet;
pub use error::{Error, ErrorKind, Result};
pub use quadham::{HamiltonData, OrderBudget, QuadraticHamiltonian, Rule};
pub use symplectic::{PhaseMatrix, Subspace};
pub use tfa::{GridSpec, PhaseGrid, SampledSignal, WavefrontReport, WindowSpec};

pub use num_complex::Complex64;
