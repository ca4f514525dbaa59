use rayon::prelude::*;

use super::config::*;
use super::dataset::{Provenance, Sample, SpeckleDataset};
use crate::error::{Error, Result};
use crate::fieldcore::{
    intensity, quantize, rasterize_object, resize, ComplexField, DigitSet, IntensityImage,
};
use crate::optics::{
    make_phase_screen, sensor_readout, AngularSpectrum, Aperture, Element, IncoherentImager, PhaseScreen, ThinLens,
    incoherent_lensless_image,
};

enum Chain {
    /// Free-space hops between elements; `first` indexes the shared first hop.
    Coherent {
        first: usize,
        elements: Vec<(Element, f64)>,
    },
    Lensless,
    Imaging(Box<IncoherentImager>),
}

/// Per-scenario state realized once: screens, point-spread functions and
/// the distinct first propagation hops shared by sweep points.
pub(crate) struct Plan {
    diffuser: Option<PhaseScreen>,
    first_hops: Vec<f64>,
    chains: Vec<Chain>,
}

impl Plan {
    pub(crate) fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        let diffuser = match (&config.diffuser, config.illumination) {
            (Some(d), Illumination::Coherent) => Some(make_phase_screen(&grid, d.correlation_length, d.seed)?),
            _ => None,
        };
        let mut first_hops: Vec<f64> = Vec::new();
        let mut chains = Vec::with_capacity(config.sweep.len());
        for (n, p) in config.sweep.iter().enumerate() {
            let geometry = p.geometry(config.sensor_dims, config.sensor_pitch);
            let chain = match config.illumination {
                Illumination::Coherent => {
                    let hop = p.elements.first().map_or(p.sensor_plane, |e| e.plane);
                    let first = match first_hops.iter().position(|&h| h == hop) {
                        Some(i) => i,
                        None => {
                            first_hops.push(hop);
                            first_hops.len() - 1
                        }
                    };
                    let mut elements = Vec::with_capacity(p.elements.len());
                    for (i, e) in p.elements.iter().enumerate() {
                        let next = p.elements.get(i + 1).map_or(p.sensor_plane, |x| x.plane);
                        let el = match e.element {
                            ElementSpec::Aperture { shape, size } => Element::Aperture(Aperture {
                                shape,
                                size,
                                center_offset: [0.0, 0.0],
                            }),
                            ElementSpec::Lens { focal_length } => Element::Lens(ThinLens { focal_length }),
                            ElementSpec::Wall {
                                correlation_length,
                                seed,
                            } => Element::Screen(make_phase_screen(&grid, correlation_length, seed)?),
                        };
                        elements.push((el, next - e.plane));
                    }
                    Chain::Coherent { first, elements }
                }
                Illumination::Incoherent if p.elements.is_empty() => Chain::Lensless,
                Illumination::Incoherent => {
                    // Without an explicit stop the lens is as wide as the grid.
                    let aperture = p
                        .aperture()
                        .unwrap_or_else(|| Aperture::square(grid.extent_x().max(grid.extent_y()) * 2.0));
                    let lens = ThinLens {
                        focal_length: p.lens_focal_length().expect("validated imaging chain"),
                    };
                    let mut g = geometry.clone();
                    g.element_planes.truncate(1);
                    let imager = IncoherentImager::new(grid, &g, &aperture, &lens).map_err(|e| Error::Sample {
                        digit: 0,
                        sweep: n,
                        source: Box::new(e),
                    })?;
                    Chain::Imaging(Box::new(imager))
                }
            };
            chains.push(chain);
        }
        Ok(Self {
            diffuser,
            first_hops,
            chains,
        })
    }

    /// Sensor readouts of one object at every sweep point.
    pub(crate) fn render(&self, config: &ScenarioConfig, object: &ComplexField) -> Result<Vec<IntensityImage>> {
        let prop = AngularSpectrum::default();
        let hops = if self.first_hops.is_empty() {
            Vec::new()
        } else {
            prop.propagate_many(object, &self.first_hops)?
        };
        let mut object_intensity = None;
        let mut out = Vec::with_capacity(self.chains.len());
        for (n, (chain, point)) in self.chains.iter().zip(&config.sweep).enumerate() {
            let geometry = point.geometry(config.sensor_dims, config.sensor_pitch);
            let img = match chain {
                Chain::Coherent { first, elements } => {
                    let mut field = hops[*first].clone();
                    for (el, hop) in elements {
                        field = el.apply(&field)?;
                        field = prop.propagate(&field, *hop)?;
                    }
                    sensor_readout(&intensity(&field), config.sensor_dims, config.sensor_pitch)
                }
                Chain::Lensless => incoherent_lensless_image(object, &geometry),
                Chain::Imaging(imager) => {
                    let oi = object_intensity.get_or_insert_with(|| intensity(object));
                    imager.image(oi)
                }
            };
            out.push(img.map_err(|e| Error::Sample {
                digit: 0,
                sweep: n,
                source: Box::new(e),
            })?);
        }
        Ok(out)
    }
}

/// Crops the readout window, resizes to the classifier input and
/// normalizes. Quantized output holds integer levels.
pub fn preprocess(readout: &IntensityImage, window: Option<usize>, p: &Preprocessing) -> Result<Vec<f32>> {
    let img = match window {
        Some(w) if w < readout.width() || w < readout.height() => {
            readout.crop_center(w.min(readout.width()), w.min(readout.height()))?
        }
        _ => readout.clone(),
    };
    let [tw, th] = p.target_dims;
    let small = resize(&img, tw, th)?;
    Ok(match p.normalization {
        Normalization::Standardize => standardize(small.values()),
        Normalization::Quantize { bits } => quantize(&small, bits)?.values().iter().map(|&v| v as f32).collect(),
    })
}

/// Zero mean, unit variance; constant inputs map to zeros.
pub fn standardize(values: &[f64]) -> Vec<f32> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 1e-300 * mean.abs().max(1.0)) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| ((v - mean) / sd) as f32).collect()
}

/// Renders the first `per_class` digits of each class at every sweep point.
///
/// Samples are ordered by digit, then sweep point; work is spread over the
/// rayon pool without affecting the result.
pub fn generate_dataset(config: &ScenarioConfig, digits: &DigitSet, per_class: usize) -> Result<SpeckleDataset> {
    if digits.is_empty() {
        return Err(Error::Argument("digit set is empty".into()));
    }
    if per_class == 0 || per_class * 10 > digits.count() {
        return Err(Error::Argument(format!(
            "{per_class} digits per class requested from a set of {}",
            digits.count()
        )));
    }
    let selected = digits.first_per_class(per_class)?;
    let plan = Plan::new(config)?;
    let grid = config.grid;
    let per_digit: Vec<Vec<Sample>> = selected
        .par_iter()
        .map(|&d| -> Result<Vec<Sample>> {
            let tag = |e: Error| match e {
                Error::Sample { sweep, source, .. } => Error::Sample {
                    digit: d,
                    sweep,
                    source,
                },
                other => Error::Sample {
                    digit: d,
                    sweep: 0,
                    source: Box::new(other),
                },
            };
            let object =
                rasterize_object(digits.bitmap(d), config.object_size, &grid, plan.diffuser.as_ref()).map_err(tag)?;
            let readouts = plan.render(config, &object).map_err(tag)?;
            readouts
                .iter()
                .zip(&config.sweep)
                .enumerate()
                .map(|(s, (img, point))| {
                    let pixels = preprocess(img, point.readout_window, &config.preprocessing).map_err(|e| {
                        Error::Sample {
                            digit: d,
                            sweep: s,
                            source: Box::new(e),
                        }
                    })?;
                    Ok(Sample {
                        label: digits.label(d),
                        sweep_index: s as u16,
                        digit: d as u32,
                        pixels,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let [w, h] = config.preprocessing.target_dims;
    SpeckleDataset::new(
        config.clone(),
        Provenance::new(config.master_seed, per_class, digits.count()),
        w,
        h,
        per_digit.into_iter().flatten().collect(),
    )
}
