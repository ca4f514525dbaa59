use std::path::Path;

use speckle_core::fieldcore::{load_idx_dir, DigitSet};
use speckle_core::learn::{evaluate, init_network, train, Architecture, EvalReport, TrainConfig, TrainOutcome};
use speckle_core::synth::{split, Illumination, ScenarioConfig, SpeckleDataset};

use crate::config::SplitConfig;
use crate::error::{CliError, CliResult};
use crate::output::SweepRow;

/// Which side of the configured split a command works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subset {
    Train,
    Val,
    Test,
    All,
}

pub struct Splits {
    pub train: SpeckleDataset,
    pub val: SpeckleDataset,
    pub test: SpeckleDataset,
}

pub fn load_digits(path: &Path) -> CliResult<DigitSet> {
    load_idx_dir(path).map_err(CliError::runtime("loading digits"))
}

/// Test side first, then a validation slice carved from the training side;
/// both cuts keep each digit's sweep variants together.
pub fn make_splits(ds: &SpeckleDataset, cfg: &SplitConfig) -> CliResult<Splits> {
    let (rest, test) = split(ds, cfg.train_fraction, cfg.seed).map_err(CliError::runtime("split"))?;
    let (train, val) = split(&rest, 1.0 - cfg.validation_fraction, cfg.seed.wrapping_add(1))
        .map_err(CliError::runtime("split"))?;
    Ok(Splits { train, val, test })
}

pub fn subset(ds: &SpeckleDataset, cfg: &SplitConfig, which: Subset) -> CliResult<SpeckleDataset> {
    if which == Subset::All {
        return Ok(ds.clone());
    }
    let s = make_splits(ds, cfg)?;
    Ok(match which {
        Subset::Train => s.train,
        Subset::Val => s.val,
        Subset::Test => s.test,
        Subset::All => unreachable!(),
    })
}

pub fn architecture_for(ds: &SpeckleDataset, arch: Option<&Architecture>) -> Architecture {
    arch.cloned()
        .unwrap_or_else(|| Architecture::default_cnn(ds.height, ds.width))
}

/// Initializes from `cfg.seed` and trains on `train`, early-stopping on `val`.
pub fn fit(
    train_set: &SpeckleDataset,
    val_set: &SpeckleDataset,
    arch: &Architecture,
    cfg: &TrainConfig,
) -> CliResult<TrainOutcome> {
    let tr = train_set.to_examples().map_err(CliError::runtime("training"))?;
    let va = val_set.to_examples().map_err(CliError::runtime("training"))?;
    if arch.input_len() != tr.input_len {
        return Err(CliError::Usage(format!(
            "architecture takes {} inputs, dataset frames have {}",
            arch.input_len(),
            tr.input_len
        )));
    }
    let init = init_network::<f32>(arch, cfg.seed).map_err(|e| CliError::Config(format!("architecture: {e}")))?;
    train(&init, &tr, &va, cfg).map_err(CliError::runtime("training"))
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// One report per trained network (a single joint one, or one per point).
    pub reports: Vec<EvalReport>,
    pub histories: Vec<TrainOutcome>,
}

/// Incoherent scenarios train a network per sweep point; coherent ones
/// train one network across all points.
pub fn per_point_training(config: &ScenarioConfig) -> bool {
    config.illumination == Illumination::Incoherent
}

pub fn sweep_dataset(
    ds: &SpeckleDataset,
    split_cfg: &SplitConfig,
    arch: Option<&Architecture>,
    train_cfg: &TrainConfig,
) -> CliResult<SweepOutcome> {
    let arch = architecture_for(ds, arch);
    let values: Vec<f64> = ds.config.sweep.iter().map(|p| p.value).collect();
    let s = make_splits(ds, split_cfg)?;
    let mut out = SweepOutcome {
        rows: Vec::new(),
        reports: Vec::new(),
        histories: Vec::new(),
    };
    if per_point_training(&ds.config) {
        for (i, &v) in values.iter().enumerate() {
            let pick = |d: &SpeckleDataset| d.sweep_subset(i as u16);
            let outcome = fit(&pick(&s.train), &pick(&s.val), &arch, train_cfg)?;
            let test = pick(&s.test).to_examples().map_err(CliError::runtime("evaluation"))?;
            let report = evaluate(&outcome.params, &test).map_err(CliError::runtime("evaluation"))?;
            out.rows.push(SweepRow {
                sweep_value: v,
                accuracy: report.accuracy,
                mode: "per_point".into(),
            });
            out.reports.push(report);
            out.histories.push(outcome);
        }
    } else {
        let outcome = fit(&s.train, &s.val, &arch, train_cfg)?;
        let test = s.test.to_examples().map_err(CliError::runtime("evaluation"))?;
        let report = evaluate(&outcome.params, &test).map_err(CliError::runtime("evaluation"))?;
        for (i, &v) in values.iter().enumerate() {
            let g = report.group(i as u16).map_or(0.0, |g| g.accuracy);
            out.rows.push(SweepRow {
                sweep_value: v,
                accuracy: g,
                mode: "joint".into(),
            });
        }
        out.reports.push(report);
        out.histories.push(outcome);
    }
    Ok(out)
}
