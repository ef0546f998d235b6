//! Mining past-time LTL intentions from demonstrations.
//!
//! Candidate specifications are scored with a maximum-entropy posterior:
//! a formula earns `|X| · KL(B(sat_demo) ‖ B(sat_random))` when the
//! demonstrations satisfy it at least as often as random behaviour does, and
//! is ruled out otherwise. On top of the scorer sits a planner over the
//! product of a grid world and a formula monitor, and a two-agent loop that
//! exchanges planned demonstrations until an inferred intent is unambiguous.
//!
//! The crate is `no_std` (with `alloc`). File formats, configuration and the
//! command line live in the companion `intent` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod concepts;
pub mod gridworld;
pub mod inference;
pub mod planner;
pub mod pltl;
pub mod rng;
pub mod transfer;

pub use concepts::{ConceptClass, ConceptConfig, TemplateFamily};
pub use gridworld::{Action, Cell, Color, GridWorld, Step, Trace};
pub use inference::{Ranking, SatStats, SpecScore};
pub use pltl::{parse_formula, Alphabet, Formula, Observation};
