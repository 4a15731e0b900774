//! Möbius, Mertens and totient tables, a sublinear Mertens engine, and exact
//! verification of inequalities for weighted sums of Mertens values.
//!
//! The central object is, for `n >= 2`,
//!
//! ```text
//! P_n(λ) = Σ_{j=0}^{n} λ^j - Σ_{k=1}^{n-1} M(⌊(n-1)/k⌋) Σ_{j=0}^{n-k} λ^j
//! ```
//!
//! which is nonnegative on `[0, 1]`, vanishes only at `λ = 0`, and is at
//! least `λ^n`. [`kernel`] computes its coefficients and evaluates it
//! exactly; [`audit`] checks each quantity used in the positivity argument;
//! [`sweep`] runs both over ranges of `n` and produces a [`VerificationReport`].
//!
//! Data-parallel loops (segmented sieving, sweeps over `n`) use rayon when
//! the `parallel` feature is on, and run sequentially otherwise.

pub mod audit;
pub mod engine;
pub mod error;
pub mod kernel;
pub mod par;
pub mod quotient;
pub mod report;
pub mod sieve;
pub mod sweep;

pub use engine::{MertensOracle, OracleStats};
pub use error::{Error, Result};
pub use kernel::{coefficients, evaluate, evaluate_float, expand_direct, CoefficientVector, Rational};
pub use par::Execution;
pub use report::{ClaimRecord, VerificationReport};
pub use sieve::{build_mertens, build_mobius, build_totient, MertensTable, MobiusTable, TotientTable};
pub use sweep::{run_sweep, Suite, SweepConfig};
