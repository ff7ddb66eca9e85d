//! Simulation and exact-verification toolkit for nonunimodular transitive graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`weight`], [`family`], [`graph`] and [`orbits`]: lazy generators for the
//!   graph families with exact relative-weight arithmetic.
//! * [`finite`] and [`truncation`]: finite balls, levels, slices, bands and the
//!   wired quotient.
//! * [`percolation`], [`walks`], [`isoperimetry`], [`forests`], [`tmtp`] and
//!   [`psn`]: the experiments built on top of truncations.
//!
//! Randomness always flows through [`rng`], whose streams are pure functions of
//! a master seed and a stream index, so results do not depend on the number of
//! worker threads.

pub mod error;
pub mod exact;
pub mod family;
pub mod finite;
pub mod forests;
pub mod graph;
pub mod isoperimetry;
pub mod orbits;
pub mod percolation;
pub mod psn;
pub mod rng;
pub mod stats;
pub mod tmtp;
pub mod truncation;
pub mod walks;
pub mod weight;

pub use error::{Error, Result};
pub use family::{Addr, Family, Step};
pub use finite::FiniteGraph;
pub use graph::{LazyGraph, LocalView, NeighborCensus, VertexId};
pub use truncation::Truncation;
pub use weight::LogWeight;
