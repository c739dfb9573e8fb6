//! One-dimensional semiclassical toolkit: Weyl and anti-Wick calculus on
//! dense kernel matrices, Moyal expansions, self-consistent TDHF and Vlasov
//! propagation, and the small-h expansion that links them.
//!
//! Operators are stored as `A[j, l] = K(x_j, x_l) dx`, so composition is a
//! matrix product and the operator trace is the matrix trace.

pub mod classical;
pub mod coherent;
pub mod error;
pub mod expansion;
mod fft;
pub mod field;
pub mod grid;
pub mod harness;
pub mod moyal;
pub mod numerics;
pub mod operator;
pub mod potential;
pub mod quantum;
pub mod slope;
pub mod spline;
pub mod weyl;

pub use error::{Error, Result};
pub use field::SymbolField;
pub use grid::{PhaseGrid, SpaceGrid};
pub use num_complex::Complex64;
pub use operator::OperatorMatrix;
pub use slope::{fit_loglog_slope, SlopeFit};
