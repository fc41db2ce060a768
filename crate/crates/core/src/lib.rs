//! Black Hats online problems and the streaming algorithms that solve them.
//!
//! An input word interleaves guardian markers `2` with prisoner segments of
//! bits. Each guardian must predict the parity of `f` over its own and all
//! later segments, and answers are scored in blocks. The crate provides the
//! problem model ([`problem`]), the prisoner functions ([`functions`]), a
//! small state-vector simulator ([`quantum`]), the online algorithms
//! ([`algorithms`]), expected-cost analysis ([`analysis`]), and exhaustive
//! lower-bound searches ([`bruteforce`]).

pub mod algorithms;
pub mod analysis;
pub mod bruteforce;
pub mod error;
pub mod functions;
pub mod problem;
pub mod quantum;

pub use error::{Error, Result};
pub use functions::Function;
pub use problem::{InputWord, ProblemSpec};
