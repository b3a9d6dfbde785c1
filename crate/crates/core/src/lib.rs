//! Kicked two-component Bose-Einstein condensate as an SU(2) spin system.
//!
//! The crate builds the (N+1)-dimensional Fock space of N two-mode atoms,
//! the one-period Floquet propagator of the pulsed coupling, and on top of
//! that the Loschmidt-echo machinery: fidelity curves, the generalized echo
//! matrix between different Fock states, cumulative echo sums, revival peak
//! tracking, SU(2) coherent states, and the double-well interference scheme
//! used to read a fidelity amplitude off an expansion image.
//!
//! ```
//! use echo_lab::{floquet::ModelParams, fidelity, spinspace::{FockIndex, SpinBasis}};
//!
//! let basis = SpinBasis::new(20).unwrap();
//! let params = ModelParams { kick: 1.0, g_c: 0.2, sigma: 0.1, ..ModelParams::default() };
//! let curve = fidelity::fidelity_curve(&basis, &params, FockIndex::new(10), 50).unwrap();
//! assert!((curve.samples[0].probability - 1.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod coherent;
mod error;
pub mod fidelity;
pub mod floquet;
pub mod interference;
mod linalg;
pub mod spinspace;

pub use error::{Error, Result};
pub use num_complex::Complex64;
