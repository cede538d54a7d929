//! Independent oracles and benchmark definitions for the acceptance
//! suite: a brute-force dominance filter, synthetic datasets with
//! closed-form labeling rules, and random case generators whose frozen
//! outputs live under `fixtures/`.
//!
//! The oracles deliberately share no logic with the engine code they
//! check; everything here is derived directly from definitions.
//!
//! Fixtures are regenerated with:
//!
//! ```text
//! cargo run -p codesign-oracle --bin gen_fixtures
//! ```

mod cases;
mod front;
mod synth;

pub use cases::{random_equivalence_cases, CaseBounds, ScheduleCase};
pub use front::{enumerate_front, random_space, FrontCase, OraclePoint, ToySearchSpace};
pub use synth::{synth_dataset, SynthKind};
