use serde::{Deserialize, Serialize};

use super::config::*;
use crate::error::{Error, Result};
use crate::fieldcore::Grid;
use crate::optics::{diffraction_limit, ApertureShape};

/// Simulation grid, object and sensor shared by all builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeskParams {
    pub grid_size: usize,
    pub pitch: f64,
    pub wavelength: f64,
    pub object_size: f64,
    pub sensor_dims: [usize; 2],
    pub sensor_pitch: f64,
    pub target_dims: [usize; 2],
}

impl Default for DeskParams {
    fn default() -> Self {
        Self {
            grid_size: 256,
            pitch: 1e-6,
            wavelength: 632.8e-9,
            object_size: 64e-6,
            sensor_dims: [128, 128],
            sensor_pitch: 1e-6,
            target_dims: [32, 32],
        }
    }
}

impl DeskParams {
    fn grid(&self) -> Result<Grid> {
        Grid::square(self.grid_size, self.pitch, self.wavelength)
    }
}

fn standardize(desk: &DeskParams) -> Preprocessing {
    Preprocessing {
        target_dims: desk.target_dims,
        normalization: Normalization::Standardize,
    }
}

// Thin lens imaging a plane at `so` onto a sensor `magnification · so` behind it.
fn imaging_focal_length(so: f64, magnification: f64) -> f64 {
    let si = magnification * so;
    1.0 / (1.0 / so + 1.0 / si)
}

/// Object moved away from a sensor along the optical axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocusSweepParams {
    pub illumination: Illumination,
    /// Lab-scale object distances in meters.
    pub distances: Vec<f64>,
    /// Lab-scale object size the desk object stands in for.
    pub reference_object_size: f64,
    /// Lab distance the incoherent camera is focused at.
    pub focus_distance: f64,
    /// Image-to-object distance ratio at focus.
    pub magnification: f64,
    /// Incoherent camera aperture in multiples of the diffraction limit at
    /// focus for one object pixel.
    pub aperture_factor: f64,
    /// Pixels across the digit bitmap.
    pub object_pixels: usize,
    /// Rough-surface phase of the displayed object (coherent only).
    pub diffuser: Option<ScreenSpec>,
    pub master_seed: u64,
    pub desk: DeskParams,
}

impl Default for FocusSweepParams {
    fn default() -> Self {
        Self {
            illumination: Illumination::Coherent,
            distances: (1..=8).map(f64::from).collect(),
            reference_object_size: 6.4e-3,
            focus_distance: 1.0,
            magnification: 0.5,
            aperture_factor: 4.0,
            object_pixels: 28,
            diffuser: Some(ScreenSpec {
                correlation_length: 0.0,
                seed: 1,
            }),
            master_seed: 0,
            desk: DeskParams::default(),
        }
    }
}

pub fn build_focus_sweep(params: &FocusSweepParams) -> Result<ScenarioConfig> {
    let desk = &params.desk;
    if params.distances.is_empty() {
        return Err(Error::Argument("focus sweep needs at least one distance".into()));
    }
    let scale = DeskScale::new(ScalingRule::Fresnel, params.reference_object_size, desk.object_size)?;
    let (sweep, diffuser) = match params.illumination {
        Illumination::Coherent => {
            let sweep = params
                .distances
                .iter()
                .map(|&d| SweepPoint {
                    value: d,
                    sensor_plane: scale.desk_distance(d),
                    elements: Vec::new(),
                    readout_window: None,
                    diffraction_threshold: false,
                })
                .collect();
            (sweep, params.diffuser)
        }
        Illumination::Incoherent => {
            let focus = scale.desk_distance(params.focus_distance);
            let si = params.magnification * focus;
            let f = imaging_focal_length(focus, params.magnification);
            if params.object_pixels == 0 {
                return Err(Error::Argument("object_pixels must be positive".into()));
            }
            let pixel = desk.object_size / params.object_pixels as f64;
            let d_min = diffraction_limit(desk.wavelength, focus, pixel)?;
            let size = params.aperture_factor * d_min;
            let sweep = params
                .distances
                .iter()
                .map(|&d| {
                    let so = scale.desk_distance(d);
                    SweepPoint {
                        value: d,
                        sensor_plane: so + si,
                        elements: vec![
                            PlacedElement {
                                plane: so,
                                element: ElementSpec::Aperture {
                                    shape: ApertureShape::Square,
                                    size,
                                },
                            },
                            PlacedElement {
                                plane: so,
                                element: ElementSpec::Lens { focal_length: f },
                            },
                        ],
                        readout_window: None,
                        diffraction_threshold: false,
                    }
                })
                .collect();
            (sweep, None)
        }
    };
    let cfg = ScenarioConfig {
        kind: ScenarioKind::FocusSweep,
        illumination: params.illumination,
        grid: desk.grid()?,
        object_size: desk.object_size,
        diffuser,
        sensor_dims: desk.sensor_dims,
        sensor_pitch: desk.sensor_pitch,
        sweep_unit: SweepUnit::Meters,
        sweep,
        preprocessing: standardize(desk),
        desk_scale: scale,
        diffraction_limit: None,
        feature_size: None,
        master_seed: params.master_seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Aperture shrunk relative to the diffraction limit at a fixed distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApertureSweepParams {
    pub illumination: Illumination,
    /// Aperture sizes in multiples of the diffraction limit.
    pub fractions: Vec<f64>,
    pub distance: f64,
    pub reference_object_size: f64,
    pub magnification: f64,
    pub shape: ApertureShape,
    /// Keep only the sensor pixels behind a coherent aperture.
    pub crop_to_aperture: bool,
    pub diffuser: Option<ScreenSpec>,
    pub master_seed: u64,
    pub desk: DeskParams,
}

impl Default for ApertureSweepParams {
    fn default() -> Self {
        Self {
            illumination: Illumination::Coherent,
            fractions: (0..7).map(|k| 10f64.powf(1.0 - 0.5 * k as f64)).collect(),
            distance: 1.0,
            reference_object_size: 0.8e-3,
            magnification: 0.5,
            shape: ApertureShape::Square,
            crop_to_aperture: true,
            diffuser: None,
            master_seed: 0,
            desk: DeskParams::default(),
        }
    }
}

pub fn build_aperture_sweep(params: &ApertureSweepParams) -> Result<ScenarioConfig> {
    let desk = &params.desk;
    if params.fractions.is_empty() {
        return Err(Error::Argument("aperture sweep needs at least one size".into()));
    }
    let scale = DeskScale::new(ScalingRule::Fresnel, params.reference_object_size, desk.object_size)?;
    let l = scale.desk_distance(params.distance);
    let dx = desk.object_size / 10.0;
    let d_min = diffraction_limit(desk.wavelength, l, dx)?;
    let sensor_side = desk.sensor_dims[0].min(desk.sensor_dims[1]);
    let sweep = params
        .fractions
        .iter()
        .map(|&frac| {
            let size = frac * d_min;
            let aperture = PlacedElement {
                plane: l,
                element: ElementSpec::Aperture {
                    shape: params.shape,
                    size,
                },
            };
            let threshold = frac == 1.0;
            match params.illumination {
                Illumination::Coherent => {
                    let px = (size / desk.sensor_pitch).round() as usize;
                    SweepPoint {
                        value: frac,
                        sensor_plane: l,
                        elements: vec![aperture],
                        readout_window: (params.crop_to_aperture && px < sensor_side).then_some(px.max(1)),
                        diffraction_threshold: threshold,
                    }
                }
                Illumination::Incoherent => SweepPoint {
                    value: frac,
                    sensor_plane: l + params.magnification * l,
                    elements: vec![
                        aperture,
                        PlacedElement {
                            plane: l,
                            element: ElementSpec::Lens {
                                focal_length: imaging_focal_length(l, params.magnification),
                            },
                        },
                    ],
                    readout_window: None,
                    diffraction_threshold: threshold,
                },
            }
        })
        .collect();
    let cfg = ScenarioConfig {
        kind: ScenarioKind::ApertureSweep,
        illumination: params.illumination,
        grid: desk.grid()?,
        object_size: desk.object_size,
        diffuser: match params.illumination {
            Illumination::Coherent => params.diffuser,
            Illumination::Incoherent => None,
        },
        sensor_dims: desk.sensor_dims,
        sensor_pitch: desk.sensor_pitch,
        sweep_unit: SweepUnit::DiffractionLimit,
        sweep,
        preprocessing: standardize(desk),
        desk_scale: scale,
        diffraction_limit: Some(d_min),
        feature_size: Some(dx),
        master_seed: params.master_seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Object → wall → sensor with no direct path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NlosParams {
    pub object_to_wall: f64,
    pub wall_to_sensor: f64,
    pub reference_object_size: f64,
    pub wall: ScreenSpec,
    pub diffuser: Option<ScreenSpec>,
    pub master_seed: u64,
    pub desk: DeskParams,
}

impl Default for NlosParams {
    fn default() -> Self {
        Self {
            object_to_wall: 4.0,
            wall_to_sensor: 8.0,
            reference_object_size: 6.4e-3,
            wall: ScreenSpec {
                correlation_length: 0.0,
                seed: 7,
            },
            diffuser: Some(ScreenSpec {
                correlation_length: 0.0,
                seed: 1,
            }),
            master_seed: 0,
            desk: DeskParams::default(),
        }
    }
}

pub fn build_nlos(params: &NlosParams) -> Result<ScenarioConfig> {
    let desk = &params.desk;
    let scale = DeskScale::new(ScalingRule::Fresnel, params.reference_object_size, desk.object_size)?;
    let z1 = scale.desk_distance(params.object_to_wall);
    let z2 = scale.desk_distance(params.wall_to_sensor);
    let cfg = ScenarioConfig {
        kind: ScenarioKind::Nlos,
        illumination: Illumination::Coherent,
        grid: desk.grid()?,
        object_size: desk.object_size,
        diffuser: params.diffuser,
        sensor_dims: desk.sensor_dims,
        sensor_pitch: desk.sensor_pitch,
        sweep_unit: SweepUnit::Meters,
        sweep: vec![SweepPoint {
            value: params.object_to_wall + params.wall_to_sensor,
            sensor_plane: z1 + z2,
            elements: vec![PlacedElement {
                plane: z1,
                element: ElementSpec::Wall {
                    correlation_length: params.wall.correlation_length,
                    seed: params.wall.seed,
                },
            }],
            readout_window: None,
            diffraction_threshold: false,
        }],
        preprocessing: standardize(desk),
        desk_scale: scale,
        diffraction_limit: None,
        feature_size: None,
        master_seed: params.master_seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Lamp-lit object seen by a bare sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncoherentBaselineParams {
    pub distances: Vec<f64>,
    pub reference_object_size: f64,
    pub bits: u8,
    pub master_seed: u64,
    pub desk: DeskParams,
}

impl Default for IncoherentBaselineParams {
    fn default() -> Self {
        Self {
            distances: vec![1.0],
            reference_object_size: 6.4e-3,
            bits: 16,
            master_seed: 0,
            desk: DeskParams::default(),
        }
    }
}

/// Geometric scaling keeps the object's angular size, which is what sets
/// the contrast of a lensless incoherent frame; the result is quantized like
/// a 16-bit camera.
pub fn build_incoherent_baseline(params: &IncoherentBaselineParams) -> Result<ScenarioConfig> {
    let desk = &params.desk;
    if params.distances.is_empty() {
        return Err(Error::Argument("baseline needs at least one distance".into()));
    }
    let scale = DeskScale::new(ScalingRule::Geometric, params.reference_object_size, desk.object_size)?;
    let cfg = ScenarioConfig {
        kind: ScenarioKind::IncoherentBaseline,
        illumination: Illumination::Incoherent,
        grid: desk.grid()?,
        object_size: desk.object_size,
        diffuser: None,
        sensor_dims: desk.sensor_dims,
        sensor_pitch: desk.sensor_pitch,
        sweep_unit: SweepUnit::Meters,
        sweep: params
            .distances
            .iter()
            .map(|&d| SweepPoint {
                value: d,
                sensor_plane: scale.desk_distance(d),
                elements: Vec::new(),
                readout_window: None,
                diffraction_threshold: false,
            })
            .collect(),
        preprocessing: Preprocessing {
            target_dims: desk.target_dims,
            normalization: Normalization::Quantize { bits: params.bits },
        },
        desk_scale: scale,
        diffraction_limit: None,
        feature_size: None,
        master_seed: params.master_seed,
    };
    cfg.validate()?;
    Ok(cfg)
}
