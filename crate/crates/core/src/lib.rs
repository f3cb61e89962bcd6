//! Core of the shepherding toolkit: planar geometry with rounded-rectangle
//! obstacles, the stochastic target/herder dynamics, the hierarchical
//! (selection + driving) controller, a small dense network stack and a PPO
//! trainer for the driving policy, and the shepherding metrics.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration,
//! plotting and the command line live in the `shepherd` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod nn;
pub mod rl;
pub mod rng;
pub mod sim;
mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;
