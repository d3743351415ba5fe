//! Random trees built by uniform attachment with freezing.
//!
//! A tree is driven by a ±1 sequence: a `+1` step attaches a new vertex to a
//! uniformly chosen active vertex, a `-1` step freezes a uniformly chosen
//! active vertex so that it can never receive children again. The crate
//! provides
//!
//! * [`sequences`] — driving sequences, their walks and regime profiles,
//! * [`builders`] — the forward construction and the time-reversed
//!   growth-coalescent construction with its merge genealogy,
//! * [`metrics`] — graph distance, height, the coalescence-time surrogate
//!   distance and sampled distance matrices,
//! * [`continuum`] — the continuous-time inhomogeneous coalescent that
//!   arises in the critical regime, with its genealogy density,
//! * [`verify`] — exact enumeration and Monte Carlo checks tying the
//!   discrete model to its limit laws,
//! * [`export`] — text formats (CSV, DOT, Newick, JSON) for trees and
//!   distance matrices.

pub mod builders;
pub mod continuum;
pub mod export;
pub mod metrics;
pub mod sequences;
pub mod stats;
pub mod verify;

pub use builders::{build_coalescent, build_forward, FrozenTree, MergeGenealogy, VertexId};
pub use sequences::{walk, FreezeSequence, ProfileShape, ProfileSpec, Walk};
