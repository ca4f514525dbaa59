use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldcore::Grid;
use crate::optics::{Aperture, ApertureShape, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    FocusSweep,
    ApertureSweep,
    Nlos,
    IncoherentBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Illumination {
    #[default]
    Coherent,
    Incoherent,
}

/// Seeded random phase screen (object diffuser or scattering wall).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenSpec {
    #[serde(default)]
    pub correlation_length: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementSpec {
    Aperture {
        #[serde(default)]
        shape: ApertureShape,
        size: f64,
    },
    Lens {
        focal_length: f64,
    },
    Wall {
        #[serde(default)]
        correlation_length: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacedElement {
    pub plane: f64,
    pub element: ElementSpec,
}

/// One sweep point: the object sits at plane 0, elements and sensor downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    /// Sweep coordinate in the config's `sweep_unit`.
    pub value: f64,
    pub sensor_plane: f64,
    #[serde(default)]
    pub elements: Vec<PlacedElement>,
    /// Central square of the sensor (in sensor pixels) kept before resizing.
    #[serde(default)]
    pub readout_window: Option<usize>,
    /// Marks the point whose aperture equals the diffraction limit.
    #[serde(default)]
    pub diffraction_threshold: bool,
}

impl SweepPoint {
    pub fn geometry(&self, sensor_dims: [usize; 2], sensor_pitch: f64) -> Geometry {
        Geometry {
            object_plane: 0.0,
            element_planes: self.elements.iter().map(|e| e.plane).collect(),
            sensor_plane: self.sensor_plane,
            sensor_dims,
            sensor_pitch,
        }
    }

    pub fn aperture(&self) -> Option<Aperture> {
        self.elements.iter().find_map(|e| match e.element {
            ElementSpec::Aperture { shape, size } => Some(Aperture {
                shape,
                size,
                center_offset: [0.0, 0.0],
            }),
            _ => None,
        })
    }

    pub fn lens_focal_length(&self) -> Option<f64> {
        self.elements.iter().find_map(|e| match e.element {
            ElementSpec::Lens { focal_length } => Some(focal_length),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Normalization {
    /// Per-image zero mean, unit variance; constant images become zeros.
    Standardize,
    /// Integer levels `round(v · (2^bits − 1) / max)`.
    Quantize { bits: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocessing {
    /// Width, height of the classifier input.
    pub target_dims: [usize; 2],
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRule {
    /// Distances scale with the square of the object size (constant Fresnel number).
    Fresnel,
    /// Distances scale linearly with the object size (constant angular size).
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepUnit {
    /// Lab-scale meters, mapped to simulation planes by the desk scale.
    Meters,
    /// Aperture size in multiples of the diffraction limit.
    DiffractionLimit,
}

/// Map between lab-scale distances and simulated planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeskScale {
    pub rule: ScalingRule,
    pub reference_object_size: f64,
    pub object_size: f64,
    /// Simulated distance per lab meter.
    pub distance_factor: f64,
}

impl DeskScale {
    pub fn new(rule: ScalingRule, reference_object_size: f64, object_size: f64) -> Result<Self> {
        if !(reference_object_size > 0.0 && object_size > 0.0) {
            return Err(Error::Argument("object sizes must be positive".into()));
        }
        let r = object_size / reference_object_size;
        let distance_factor = match rule {
            ScalingRule::Fresnel => r * r,
            ScalingRule::Geometric => r,
        };
        Ok(Self {
            rule,
            reference_object_size,
            object_size,
            distance_factor,
        })
    }

    pub fn desk_distance(&self, lab_distance: f64) -> f64 {
        lab_distance * self.distance_factor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub illumination: Illumination,
    pub grid: Grid,
    /// Side of the square the digit is drawn into, in meters.
    pub object_size: f64,
    /// Random phase imprinted on the object (rough display surface).
    #[serde(default)]
    pub diffuser: Option<ScreenSpec>,
    pub sensor_dims: [usize; 2],
    pub sensor_pitch: f64,
    pub sweep_unit: SweepUnit,
    pub sweep: Vec<SweepPoint>,
    pub preprocessing: Preprocessing,
    pub desk_scale: DeskScale,
    /// Diffraction limit `λL/Δx` for aperture sweeps.
    #[serde(default)]
    pub diffraction_limit: Option<f64>,
    /// Resolution target Δx used for the diffraction limit.
    #[serde(default)]
    pub feature_size: Option<f64>,
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.object_size > 0.0 && self.object_size.is_finite()) {
            return Err(Error::Argument(format!("object size {} must be positive", self.object_size)));
        }
        if self.sweep.is_empty() {
            return Err(Error::Argument("sweep must contain at least one point".into()));
        }
        if self.sweep.len() > u16::MAX as usize {
            return Err(Error::Argument(format!("{} sweep points exceed the u16 index", self.sweep.len())));
        }
        let [tw, th] = self.preprocessing.target_dims;
        if tw == 0 || th == 0 || tw > self.sensor_dims[0] || th > self.sensor_dims[1] {
            return Err(Error::Argument(format!(
                "target dims {tw}x{th} must be positive and within sensor dims {:?}",
                self.sensor_dims
            )));
        }
        if let Normalization::Quantize { bits } = self.preprocessing.normalization {
            if !(1..=16).contains(&bits) {
                return Err(Error::Argument(format!("bit depth {bits} outside 1..=16")));
            }
        }
        if let Some(d) = &self.diffuser {
            if !(d.correlation_length >= 0.0 && d.correlation_length.is_finite()) {
                return Err(Error::Argument("diffuser correlation length must be nonnegative".into()));
            }
        }
        for (n, p) in self.sweep.iter().enumerate() {
            self.validate_point(p).map_err(|e| match e {
                Error::Geometry(m) => Error::Geometry(format!("sweep point {n}: {m}")),
                Error::Argument(m) => Error::Argument(format!("sweep point {n}: {m}")),
                other => other,
            })?;
        }
        Ok(())
    }

    fn validate_point(&self, p: &SweepPoint) -> Result<()> {
        p.geometry(self.sensor_dims, self.sensor_pitch).validate()?;
        if !p.value.is_finite() {
            return Err(Error::Argument("sweep value must be finite".into()));
        }
        if let Some(w) = p.readout_window {
            if w == 0 || w > self.sensor_dims[0].min(self.sensor_dims[1]) {
                return Err(Error::Geometry(format!("readout window {w} outside the sensor")));
            }
        }
        for e in &p.elements {
            match e.element {
                ElementSpec::Aperture { size, .. } if !(size > 0.0 && size.is_finite()) => {
                    return Err(Error::Argument(format!("aperture size {size} must be positive")))
                }
                ElementSpec::Lens { focal_length } if !(focal_length != 0.0 && focal_length.is_finite()) => {
                    return Err(Error::Argument("lens focal length must be finite and nonzero".into()))
                }
                ElementSpec::Wall { correlation_length, .. }
                    if !(correlation_length >= 0.0 && correlation_length.is_finite()) =>
                {
                    return Err(Error::Argument("wall correlation length must be nonnegative".into()))
                }
                _ => {}
            }
        }
        if self.illumination == Illumination::Incoherent && !p.elements.is_empty() {
            // Incoherent chains are either lensless or a single imaging stage.
            let plane = p.elements[0].plane;
            let ok = p.lens_focal_length().is_some()
                && p.elements.len() <= 2
                && p.elements.iter().all(|e| {
                    e.plane == plane && !matches!(e.element, ElementSpec::Wall { .. })
                });
            if !ok {
                return Err(Error::Geometry(
                    "incoherent chains take either no elements or one lens with an optional aperture in one plane"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    /// Index of the point flagged as the diffraction threshold, if any.
    pub fn threshold_point(&self) -> Option<usize> {
        self.sweep.iter().position(|p| p.diffraction_threshold)
    }
}
