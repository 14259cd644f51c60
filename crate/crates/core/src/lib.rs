//! Finite-stage model of Martin-Löf tests on Cantor space: canonical clopen
//! sets with exact dyadic measure, stage-scheduled tests and their
//! combinators, randomness deficiency, stage constructions with recorded
//! obligations, and realizer pairs as monotone stream transducers.

pub mod bits;
pub mod clopen;
pub mod constructions;
pub mod deficiency;
pub mod dyadic;
pub mod enumeration;
pub mod error;
pub mod realizers;
pub mod runner;
pub mod scenario;
pub mod trace;

pub use bits::{bits, pair, str_order, unpair, Bits};
pub use clopen::{canonicalize, Clopen};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
