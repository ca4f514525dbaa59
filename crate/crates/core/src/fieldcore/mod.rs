//! Complex fields, intensity images, digit ingestion and object rasterization.

mod field;
pub mod idx;
mod image;
mod raster;

pub use field::{ComplexField, Grid};
pub use idx::{load_idx, load_idx_dir, DigitSet};
pub use image::{downsample, intensity, quantize, resize, IntensityImage};
pub use raster::{rasterize_object, Bitmap};
