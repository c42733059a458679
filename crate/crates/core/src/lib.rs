//! Finite-horizon engine for guessing sequences on ω.
//!
//! The crate builds perfect splitting pseudo-trees, evaluates guessing
//! sequences `⟨𝒜ₙ⟩` against subject sets, certifies finite intersection
//! properties of the filter bases they generate, and measures how often
//! random sets are guessed. Every object is truncated at an explicit horizon
//! and every claim it makes is a claim about that truncation.

pub mod bits;
pub mod diagonal;
pub mod error;
pub mod filter;
pub mod fubini;
pub mod funcspec;
pub mod guessing;
pub mod io;
pub mod isbell;
pub mod probability;
pub mod rng;
pub mod selector;
pub mod tree;

pub use bits::{BitString, SetWindow};
pub use error::{Error, Result};
pub use funcspec::{eval_func, fiber_census, parse_funcspec, FiberReport, FuncSpec};
pub use guessing::{guess_levels, restrict_guessing, rk_transport, GuessSet, GuessingStructure};
