//! Configuration files, command implementations, on-disk formats and SVG
//! figures for the shepherding toolkit. The simulation itself lives in
//! `shepherd_core`.

pub mod bench;
pub mod campaign;
pub mod config;
pub mod error;
pub mod io;
pub mod render;
pub mod svg;
pub mod training;

pub use config::{Preset, RunConfig, Strategy};
pub use error::{Result, RunError};
pub use shepherd_core as core;
