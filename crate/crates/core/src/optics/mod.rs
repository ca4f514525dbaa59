//! Scalar wave propagation, thin optical elements and sensor models.
//!
//! Fields follow the `exp(-ikz)` convention: a plane wave travelling a
//! distance `z` picks up phase `-kz`. [`propagate_as`] is the workhorse;
//! [`propagate_direct`] is a brute-force summation kept as an oracle.

mod direct;
mod elements;
pub(crate) mod fft;
mod incoherent;
mod propagate;
mod sensor;

pub use direct::{propagate_direct, propagate_direct_with, DirectKernel, DIRECT_MAX_SIDE};
pub use elements::{
    apply_aperture, apply_lens, apply_phase_screen, diffraction_limit, make_phase_screen, Aperture,
    ApertureShape, PhaseScreen, ThinLens,
};
pub use incoherent::{incoherent_imaging, incoherent_lensless_direct, incoherent_lensless_image, IncoherentImager};
pub use propagate::{propagate_as, AngularSpectrum, Propagation};
pub use sensor::{coherent_sensor_field, coherent_sensor_image, sensor_readout, Element, Geometry};
