//! Simulation lab for reductions from differentially private inner-product
//! channels to weak erasure channels and oblivious transfer.
//!
//! The crate is organised around the objects the reduction manipulates:
//!
//! * [`signs`] and [`stream`] hold sign vectors, index masks and seeded randomness.
//! * [`channels`] samples correlated views from DP inner-product channels.
//! * [`awec`] and [`wec`] run the approximate and exact weak erasure protocols.
//! * [`attacks`] implements the adversaries used by the security reductions.
//! * [`harness`] turns all of the above into statistical certificates.
//! * [`cli`] exposes the harness on the command line.

pub mod attacks;
pub mod awec;
pub mod channels;
pub mod cli;
pub mod error;
pub mod harness;
pub mod signs;
pub mod stream;
pub mod wec;

pub use error::{Error, Result};
pub use signs::{IndexMask, Revealed, SignVector};
pub use stream::RandomStream;
