use serde::{Deserialize, Serialize};

use super::elements::{apply_aperture, apply_lens, apply_phase_screen, Aperture, PhaseScreen, ThinLens};
use super::propagate::AngularSpectrum;
use crate::error::{Error, Result};
use crate::fieldcore::{intensity, ComplexField, IntensityImage};

/// Axial layout of an optical chain, in meters along the propagation axis.
///
/// Planes are non-decreasing: an element may share a plane with its
/// neighbour (an aperture directly on a lens or on the sensor surface).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub object_plane: f64,
    pub element_planes: Vec<f64>,
    pub sensor_plane: f64,
    pub sensor_dims: [usize; 2],
    pub sensor_pitch: f64,
}

impl Geometry {
    pub fn lensless(distance: f64, sensor_dims: [usize; 2], sensor_pitch: f64) -> Self {
        Self {
            object_plane: 0.0,
            element_planes: Vec::new(),
            sensor_plane: distance,
            sensor_dims,
            sensor_pitch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut planes = vec![self.object_plane];
        planes.extend_from_slice(&self.element_planes);
        planes.push(self.sensor_plane);
        if planes.iter().any(|p| !p.is_finite()) {
            return Err(Error::Geometry("plane positions must be finite".into()));
        }
        if let Some(w) = planes.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::Geometry(format!(
                "planes out of order: {} follows {}",
                w[1], w[0]
            )));
        }
        if self.sensor_dims[0] == 0 || self.sensor_dims[1] == 0 {
            return Err(Error::Geometry("sensor dimensions must be positive".into()));
        }
        if !(self.sensor_pitch > 0.0 && self.sensor_pitch.is_finite()) {
            return Err(Error::Geometry(format!(
                "sensor pitch must be positive, got {}",
                self.sensor_pitch
            )));
        }
        Ok(())
    }

    /// Total object-to-sensor distance.
    pub fn span(&self) -> f64 {
        self.sensor_plane - self.object_plane
    }
}

/// Optical element placed at one of the geometry's element planes.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Aperture(Aperture),
    Lens(ThinLens),
    Screen(PhaseScreen),
}

impl Element {
    pub fn apply(&self, field: &ComplexField) -> Result<ComplexField> {
        match self {
            Element::Aperture(a) => apply_aperture(field, a),
            Element::Lens(l) => apply_lens(field, l),
            Element::Screen(s) => apply_phase_screen(field, s),
        }
    }
}

/// Integer ratio between sensor pitch and the simulation pitch.
pub(crate) fn bin_factor(field_pitch: f64, sensor_pitch: f64) -> Result<usize> {
    let ratio = sensor_pitch / field_pitch;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-6 * ratio {
        return Err(Error::Geometry(format!(
            "sensor pitch {sensor_pitch} is not an integer multiple of the grid pitch {field_pitch}"
        )));
    }
    Ok(k as usize)
}

/// Crops the central `sensor_dims × k` window of a simulated intensity and
/// integrates each `k × k` block into one sensor pixel (block mean).
pub fn sensor_readout(image: &IntensityImage, sensor_dims: [usize; 2], sensor_pitch: f64) -> Result<IntensityImage> {
    let k = bin_factor(image.pitch(), sensor_pitch)?;
    let [w, h] = sensor_dims;
    if w == 0 || h == 0 {
        return Err(Error::Geometry("sensor dimensions must be positive".into()));
    }
    if w * k > image.width() || h * k > image.height() {
        return Err(Error::Geometry(format!(
            "propagated grid {}x{} is smaller than the {}x{} sensor window",
            image.width(),
            image.height(),
            w * k,
            h * k
        )));
    }
    let window = image.crop_center(w * k, h * k)?;
    if k == 1 {
        return Ok(window);
    }
    crate::fieldcore::downsample(&window, w, h)
}

/// Propagates through the element chain and records intensity at the sensor.
pub fn coherent_sensor_image(
    object_field: &ComplexField,
    geometry: &Geometry,
    elements: &[Element],
) -> Result<IntensityImage> {
    let field = coherent_sensor_field(object_field, geometry, elements)?;
    sensor_readout(&intensity(&field), geometry.sensor_dims, geometry.sensor_pitch)
}

/// Complex field arriving at the sensor plane, before readout.
pub fn coherent_sensor_field(
    object_field: &ComplexField,
    geometry: &Geometry,
    elements: &[Element],
) -> Result<ComplexField> {
    geometry.validate()?;
    if elements.len() != geometry.element_planes.len() {
        return Err(Error::Geometry(format!(
            "{} elements but {} element planes",
            elements.len(),
            geometry.element_planes.len()
        )));
    }
    let prop = AngularSpectrum::default();
    let mut field = object_field.clone();
    let mut z = geometry.object_plane;
    for (el, &plane) in elements.iter().zip(&geometry.element_planes) {
        field = prop.propagate(&field, plane - z)?;
        field = el.apply(&field)?;
        z = plane;
    }
    prop.propagate(&field, geometry.sensor_plane - z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcore::Grid;
    use num_complex::Complex64;

    const LAM: f64 = 6.328e-7;

    #[test]
    fn degenerate_pipeline_returns_object_intensity() {
        let g = Grid::square(16, 1e-6, LAM).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(x * 1e5, 1.0 + y * 1e5)).unwrap();
        let geo = Geometry::lensless(0.0, [16, 16], 1e-6);
        assert_eq!(coherent_sensor_image(&f, &geo, &[]).unwrap(), intensity(&f));
    }

    #[test]
    fn geometry_validation() {
        let mut geo = Geometry::lensless(1.0, [4, 4], 1e-6);
        assert!(geo.validate().is_ok());
        geo.element_planes = vec![0.5, 0.2];
        assert!(geo.validate().is_err());
        geo.element_planes = vec![0.5, 1.0];
        assert!(geo.validate().is_ok());
        geo.sensor_dims = [0, 4];
        assert!(geo.validate().is_err());
    }

    #[test]
    fn element_count_must_match_planes() {
        let g = Grid::square(8, 1e-6, LAM).unwrap();
        let f = ComplexField::plane_wave(g).unwrap();
        let mut geo = Geometry::lensless(1e-5, [8, 8], 1e-6);
        geo.element_planes = vec![5e-6];
        assert!(matches!(coherent_sensor_image(&f, &geo, &[]), Err(Error::Geometry(_))));
    }

    #[test]
    fn readout_bins_and_rejects_oversized_window() {
        let im = IntensityImage::new(4, 4, 1e-6, (0..16).map(|v| v as f64).collect()).unwrap();
        let r = sensor_readout(&im, [2, 2], 2e-6).unwrap();
        assert_eq!(r.values(), &[2.5, 4.5, 10.5, 12.5]);
        assert!(matches!(sensor_readout(&im, [3, 3], 2e-6), Err(Error::Geometry(_))));
        assert!(matches!(sensor_readout(&im, [2, 2], 1.5e-6), Err(Error::Geometry(_))));
        assert_eq!(sensor_readout(&im, [2, 2], 1e-6).unwrap().values(), &[5.0, 6.0, 9.0, 10.0]);
    }
}
