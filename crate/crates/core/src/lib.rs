//! Social-influence recommendation engine.
//!
//! Two models built on a shared ratings table and friendship graph:
//!
//! - individual recommendation: user-based collaborative filtering blended
//!   with the outcome of a linear-threshold social contagion simulation
//!   through a per-user susceptibility factor;
//! - group recommendation: opinions evolve under interpersonal influence to
//!   a settled pattern of disagreement, which is then aggregated.
//!
//! A Watts-Strogatz generator and a seeded experiment harness support
//! simulation studies of the contagion process.

pub mod blend;
pub mod cf;
pub mod contagion;
pub mod error;
pub mod experiments;
pub mod group;
pub mod model;
pub mod netgen;
pub mod seeds;

pub use error::{Error, Result};
pub use model::{RatingScale, RatingsTable, SocialGraph, StateVector, SusceptibilityProfile};
