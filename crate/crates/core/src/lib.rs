//! Computational laboratory for W-tricked prime densities, truncated divisor
//! sums and their pseudorandom majorant over `Z_M`.
//!
//! The crate is organised bottom-up:
//!
//! - [`sieve`]: smallest-prime-factor tables, segmented primality windows,
//!   primorials and modular inverses.
//! - [`measures`]: resolved experiment parameters and the window functions
//!   `f`, `Λ_R(Wn+1)` and `ν` over the representatives `N, …, N+M−1`.
//! - [`expectations`]: means, linear-forms expectations, Goldston–Yıldırım
//!   product moments, correlation sums and the `τ` weight.
//! - [`ap_count`]: exact k-term progression expectations and integer
//!   progression counts for primes in the short interval.
//! - [`report`]: serializable check records shared by the front ends.

pub mod ap_count;
mod bitset;
mod error;
pub mod expectations;
pub mod measures;
pub mod report;
pub mod sieve;

pub use bitset::BitSet;
pub use error::{Error, Result};
