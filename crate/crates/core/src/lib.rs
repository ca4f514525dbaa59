//! Speckle-based object recognition toolkit.
//!
//! * [`fieldcore`]: complex fields, intensity images, IDX digits, rasterization.
//! * [`optics`]: angular-spectrum propagation, elements, sensor models.
//! * [`synth`]: scenario builders, dataset generation and persistence.
//! * [`learn`]: a small from-scratch classifier.

mod container;
pub mod error;
pub mod fieldcore;
pub mod learn;
pub mod optics;
pub mod synth;

pub use error::{Error, Result};
