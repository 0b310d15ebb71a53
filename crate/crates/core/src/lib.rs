//! Reasoning over company ownership graphs.
//!
//! The crate computes integrated ownership, company control, conglomerates
//! and takeover screening for strategic companies. Everything is generic over
//! the [`Share`] scalar; the aliases below fix the common choices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod components;
pub mod conglomerate;
pub mod control;
pub mod error;
pub mod generator;
pub mod golden_power;
pub mod graph;
pub mod ownership;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::{Entity, EntityKind, OwnershipGraph, Transaction};
pub use scalar::Share;

/// Exact rational shares: threshold decisions carry no rounding.
pub type ExactShare = num_rational::BigRational;
pub type ExactGraph = OwnershipGraph<ExactShare>;
pub type ExactTransaction = Transaction<ExactShare>;
