//! Numerical toolkit for weighted variable-exponent Lebesgue spaces
//! `L^{p(·)}(w)` with local Muckenhoupt weights.
//!
//! The crate works on a uniform midpoint grid over `[-L, L]` (see [`grid`]) and
//! provides the modular and Luxemburg norm ([`norms`]), exponents and weights
//! ([`exponent`]), Daubechies wavelet systems with the square functions `V`,
//! `W₁`, `W₂` ([`wavelets`]), local maximal operators, medians, mean
//! oscillations, sparse families and local Calderón–Zygmund kernels
//! ([`operators`]), and the experiment harness behind the `varlp` binary
//! ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod exponent;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod smooth;
pub mod wavelets;

pub use error::{Error, Result};
