//! Overall-survival treatment-effect estimation under treatment switching.
//!
//! Control-arm patients who cross over to the experimental drug dilute the
//! intention-to-treat hazard ratio. The [`adjust`] module implements seven
//! ways of recovering the effect of treatment had nobody switched; [`sim`]
//! and [`eval`] run the simulation study that compares them.

pub mod adjust;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod report;
pub mod sim;
pub mod survival;

pub use error::{Error, Result};
