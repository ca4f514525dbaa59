use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldcore::{ComplexField, Grid};

/// Largest source or sensor side accepted by the direct summations.
pub const DIRECT_MAX_SIDE: usize = 64;

/// Point-to-point kernel used by [`propagate_direct_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectKernel {
    /// `exp(-ikr) / r`.
    #[default]
    Spherical,
    /// First Rayleigh–Sommerfeld impulse response
    /// `(z / 2π r) (1/r + ik) exp(-ikr) / r`, the exact counterpart of the
    /// angular-spectrum transfer function.
    RayleighSommerfeld,
}

pub(crate) fn check_direct_sizes(source: &Grid, sensor: &Grid) -> Result<()> {
    for (name, g) in [("source", source), ("sensor", sensor)] {
        if g.width > DIRECT_MAX_SIDE || g.height > DIRECT_MAX_SIDE {
            return Err(Error::Argument(format!(
                "{name} grid {}x{} exceeds the direct-summation limit of {DIRECT_MAX_SIDE}x{DIRECT_MAX_SIDE}",
                g.width, g.height
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_axial(distance: f64) -> Result<()> {
    if distance == 0.0 {
        return Err(Error::SingularKernel("axial distance is zero".into()));
    }
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::Argument(format!("distance must be positive, got {distance}")));
    }
    Ok(())
}

/// Brute-force summation `Σ source(R) K(|R - r|) pitch²` onto a sensor grid
/// centered on the same axis, with the spherical kernel.
pub fn propagate_direct(source: &ComplexField, distance: f64, sensor: &Grid) -> Result<ComplexField> {
    propagate_direct_with(source, distance, sensor, DirectKernel::Spherical)
}

pub fn propagate_direct_with(
    source: &ComplexField,
    distance: f64,
    sensor: &Grid,
    kernel: DirectKernel,
) -> Result<ComplexField> {
    check_axial(distance)?;
    sensor.validate()?;
    let sg = *source.grid();
    check_direct_sizes(&sg, sensor)?;
    if ((sensor.wavelength - sg.wavelength) / sg.wavelength).abs() > 1e-12 {
        return Err(Error::Argument("sensor and source wavelengths differ".into()));
    }
    let k = sg.wavenumber();
    let area = sg.pitch * sg.pitch;
    let z2 = distance * distance;
    let pts: Vec<(f64, f64, Complex64)> = (0..sg.height)
        .flat_map(|j| (0..sg.width).map(move |i| (i, j)))
        .map(|(i, j)| (sg.x(i), sg.y(j), source.at(i, j)))
        .filter(|p| p.2 != Complex64::new(0.0, 0.0))
        .collect();
    let amplitude: Vec<Complex64> = (0..sensor.len())
        .into_par_iter()
        .map(|n| {
            let (x, y) = (sensor.x(n % sensor.width), sensor.y(n / sensor.width));
            let mut acc = Complex64::new(0.0, 0.0);
            for &(sx, sy, a) in &pts {
                let r = ((x - sx).powi(2) + (y - sy).powi(2) + z2).sqrt();
                let phase = Complex64::from_polar(1.0, -k * r);
                let w = match kernel {
                    DirectKernel::Spherical => phase / r,
                    DirectKernel::RayleighSommerfeld => {
                        Complex64::new(1.0 / r, k) * phase * (distance / (2.0 * std::f64::consts::PI * r * r))
                    }
                };
                acc += a * w;
            }
            acc * area
        })
        .collect();
    ComplexField::new(*sensor, amplitude)
}
