//! The matrix of 6h±1 products `p(k)·f(n)` and the prime-locating
//! constructions built on it.
//!
//! Rows are indexed by the primes from 5 on, columns by the naturals of the
//! form 6h±1. Its *defining* entries are exactly the products of two primes
//! ≥ 7, and its leading entries are the squares of primes on the diagonal.
//! From these the crate derives:
//!
//! * [`method1`]: `D(m⁴)` and a candidate prime in `(m², (m+1)²)`;
//! * [`activeset`]: every prime in `(m², (m+1)²)` from one matrix row;
//! * [`verifier`]: per-`m` outcome classification over ranges.
//!
//! All arithmetic is exact. [`oracle`] holds slow brute-force references
//! used by the test suites.

pub mod activeset;
pub mod decimal;
pub mod elements;
pub mod error;
pub mod method1;
pub mod oracle;
pub mod primes;
pub mod sequences;
pub mod verifier;

pub use activeset::{build_active_set, ActiveSet, Membership};
pub use elements::{Direction, LeadingStep, TElement, TMatrix, Transition};
pub use error::{Error, Result};
pub use method1::{run_method1, Method1Result};
pub use primes::{MillerRabin, PrimalityTest, PrimeOracle};
pub use sequences::{capacity, nu, wheel, MatrixIndex, PrimeTable, WheelNumber};
pub use verifier::{evaluate, scan_range, Checks, Outcome, OutcomeReport, RangeSummary};
