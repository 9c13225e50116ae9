//! Dense graph limits at desk scale: tower coordinates, concrete graphons,
//! W-random sampling, weak regularity and constraint evaluation.

#![allow(clippy::needless_range_loop)]

pub mod constraints;
pub mod coords;
pub mod error;
pub mod exact;
pub mod graphons;
pub mod regularity;
pub mod sampling;

pub use error::{Error, Result};
pub use graphons::{Graphon, GraphonDescriptor};
