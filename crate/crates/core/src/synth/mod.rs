//! Scenario builders, dataset generation, persistence and splits.

mod build;
mod config;
mod dataset;
mod generate;

pub use build::{
    build_aperture_sweep, build_focus_sweep, build_incoherent_baseline, build_nlos, ApertureSweepParams,
    DeskParams, FocusSweepParams, IncoherentBaselineParams, NlosParams,
};
pub use config::{
    DeskScale, ElementSpec, Illumination, Normalization, PlacedElement, Preprocessing, ScalingRule,
    ScenarioConfig, ScenarioKind, ScreenSpec, SweepPoint, SweepUnit,
};
pub use dataset::{load_dataset, save_dataset, split, Provenance, Sample, SpeckleDataset, DATASET_VERSION};
pub use generate::{generate_dataset, preprocess, standardize};
