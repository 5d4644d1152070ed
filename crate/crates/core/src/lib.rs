//! Vervaat transforms of Brownian motion and Brownian bridges.
//!
//! The crate is organised around the objects it manipulates:
//!
//! * [`path`]: lattice walks, sampled grid paths and the deterministic path
//!   transforms (Vervaat, quantile, cyclic shift, duality reversal, excursion
//!   exchange, first-return functionals).
//! * [`lattice`]: exhaustive enumeration of simple-walk bridges and exact
//!   rational laws built on the cycle lemma.
//! * [`rng`] and [`samplers`]: reproducible per-replicate random streams and
//!   grid-exact samplers for every process used (bridges, Bessel(3) bridges,
//!   excursions, first-passage bridges, meanders, Vervaat bridges).
//! * [`closed_forms`] and [`quadrature`]: densities, kernels and moments in
//!   closed form, plus numeric CDFs for goodness-of-fit testing.
//! * [`minorant`]: convex minorants of grid paths.
//! * [`stats`] and [`verify`]: goodness-of-fit statistics and the named
//!   experiment suite.
//!
//! Path-level code is generic over the floating point type through
//! [`Scalar`]; the usual instantiations are exported as [`Path`] and
//! [`Path32`]. Discrete laws are exact rationals ([`ExactPmf`]).

pub mod closed_forms;
pub mod error;
pub mod lattice;
pub mod minorant;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::ExactPmf;
pub use path::{LatticeWalk, SampledPath};
pub use rng::RngStream;
pub use scalar::Scalar;

/// Double precision grid path, the default for simulation work.
pub type Path = SampledPath<f64>;
/// Single precision grid path.
pub type Path32 = SampledPath<f32>;
/// Convex minorant of a double precision path.
pub type Minorant = minorant::MinorantResult<f64>;
