//! Path containers and the deterministic path transforms.
//!
//! Lattice walks live in [`walk`], real-valued grid paths in [`grid`]. The
//! transforms in [`transforms`] are pure functions; none of them keeps state
//! between calls.

pub mod grid;
pub mod transforms;
pub mod walk;

pub use grid::{fmt17, SampledPath};
pub use transforms::{
    argmin_first, argmin_walk, dual_reverse, exchange_straddling, first_return_time,
    last_hit_time, quantile_discrete, shift_cyclic, vervaat_discrete, vervaat_grid,
};
pub use walk::LatticeWalk;

/// A position on a lattice walk (`0..=n`) or on a grid path (`0..=N`).
pub type SplitIndex = usize;
