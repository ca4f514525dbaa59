use std::path::{Path, PathBuf};

use speckle_core::learn::{evaluate, load_params, save_params};
use speckle_core::synth::{generate_dataset, load_dataset, save_dataset, SpeckleDataset};
use speckle_core::Error;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path, RunManifest};
use crate::output::{to_gray8, write_history_csv, write_pgm, write_report_csv, write_sweep_csv};
use crate::pipeline::{architecture_for, fit, load_digits, make_splits, subset, sweep_dataset, Subset};

/// Parsed `--config` plus its raw bytes for hashing.
pub struct Loaded {
    pub config: RunConfig,
    pub bytes: Option<Vec<u8>>,
}

impl Loaded {
    pub fn from_path(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => {
                let (config, bytes) = RunConfig::load(p)?;
                Ok(Self {
                    config,
                    bytes: Some(bytes),
                })
            }
            None => Ok(Self {
                config: RunConfig::default(),
                bytes: None,
            }),
        }
    }
}

fn digits_path(cfg: &RunConfig, flag: Option<&Path>) -> CliResult<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.digits.clone())
        .ok_or_else(|| CliError::Usage("no digit source: pass --digits or set `digits` in the config".into()))
}

fn read_dataset(path: &Path) -> CliResult<SpeckleDataset> {
    load_dataset(path).map_err(|e| match e {
        Error::Io(source) => CliError::Io {
            path: path.display().to_string(),
            source,
        },
        other => CliError::Runtime {
            stage: "loading dataset",
            source: other,
        },
    })
}

pub fn cmd_generate(
    loaded: &Loaded,
    digits: Option<&Path>,
    per_class: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<RunManifest> {
    let cfg = &loaded.config;
    let mut m = RunManifest::start("generate", loaded.bytes.as_deref());
    let spec = cfg
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no `scenario` section".into()))?;
    let scenario = spec.build(seed)?;
    let dpath = digits_path(cfg, digits)?;
    let set = load_digits(&dpath)?;
    let per = per_class.unwrap_or(cfg.per_class);
    let ds = generate_dataset(&scenario, &set, per).map_err(CliError::runtime("generation"))?;
    save_dataset(&ds, out).map_err(CliError::runtime("writing dataset"))?;
    m.seed("master_seed", scenario.master_seed);
    m.output(out)?;
    m.finish(&manifest_path(out))
}

pub fn cmd_train(loaded: &Loaded, dataset: &Path, seed: Option<u64>, out: &Path) -> CliResult<RunManifest> {
    let cfg = &loaded.config;
    let mut m = RunManifest::start("train", loaded.bytes.as_deref());
    m.input(dataset)?;
    let ds = read_dataset(dataset)?;
    let mut tcfg = cfg.train.clone();
    if let Some(s) = seed {
        tcfg.seed = s;
    }
    let arch = architecture_for(&ds, cfg.architecture.as_ref());
    let s = make_splits(&ds, &cfg.split)?;
    let outcome = fit(&s.train, &s.val, &arch, &tcfg)?;
    save_params(&outcome.params, out).map_err(CliError::runtime("writing params"))?;
    let hist = history_path(out);
    write_history_csv(&hist, &outcome.history)?;
    m.seed("train_seed", tcfg.seed);
    m.seed("split_seed", cfg.split.seed);
    m.output(out)?;
    m.output(&hist)?;
    m.finish(&manifest_path(out))
}

/// `<out>.history.csv` next to a params file.
pub fn history_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".history.csv");
    s.into()
}

pub fn cmd_eval(loaded: &Loaded, params: &Path, dataset: &Path, which: Subset, out: &Path) -> CliResult<RunManifest> {
    let cfg = &loaded.config;
    let mut m = RunManifest::start("eval", loaded.bytes.as_deref());
    m.input(params)?;
    m.input(dataset)?;
    let p = load_params(params).map_err(|e| match e {
        Error::Io(source) => CliError::Io {
            path: params.display().to_string(),
            source,
        },
        other => CliError::Runtime {
            stage: "loading params",
            source: other,
        },
    })?;
    let ds = read_dataset(dataset)?;
    let part = subset(&ds, &cfg.split, which)?;
    let ex = part.to_examples().map_err(CliError::runtime("evaluation"))?;
    if ex.input_len != p.architecture.input_len() {
        return Err(CliError::Usage(format!(
            "params expect {} inputs, dataset frames have {}",
            p.architecture.input_len(),
            ex.input_len
        )));
    }
    let report = evaluate(&p, &ex).map_err(CliError::runtime("evaluation"))?;
    let values: Vec<f64> = ds.config.sweep.iter().map(|s| s.value).collect();
    write_report_csv(out, &report, &values)?;
    m.seed("split_seed", cfg.split.seed);
    m.output(out)?;
    m.finish(&manifest_path(out))
}

pub fn cmd_sweep(
    loaded: &Loaded,
    digits: Option<&Path>,
    per_class: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<RunManifest> {
    let cfg = &loaded.config;
    let mut m = RunManifest::start("sweep", loaded.bytes.as_deref());
    let spec = cfg
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no `scenario` section".into()))?;
    let scenario = spec.build(seed)?;
    let set = load_digits(&digits_path(cfg, digits)?)?;
    let ds = generate_dataset(&scenario, &set, per_class.unwrap_or(cfg.per_class))
        .map_err(CliError::runtime("generation"))?;
    let result = sweep_dataset(&ds, &cfg.split, cfg.architecture.as_ref(), &cfg.train)?;
    write_sweep_csv(out, &result.rows)?;
    m.seed("master_seed", scenario.master_seed);
    m.seed("train_seed", cfg.train.seed);
    m.seed("split_seed", cfg.split.seed);
    m.output(out)?;
    let values: Vec<f64> = scenario.sweep.iter().map(|s| s.value).collect();
    for (i, r) in result.reports.iter().enumerate() {
        let mut s = out.as_os_str().to_owned();
        s.push(format!(".report{i}.csv"));
        let p = PathBuf::from(s);
        write_report_csv(&p, r, &values)?;
        m.output(&p)?;
    }
    m.finish(&manifest_path(out))
}

/// Parses `0,3,5-9` style index lists.
pub fn parse_indices(text: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad index list {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn cmd_render(dataset: &Path, indices: &[usize], out_dir: &Path) -> CliResult<RunManifest> {
    let mut m = RunManifest::start("render", None);
    m.input(dataset)?;
    let ds = read_dataset(dataset)?;
    if let Some(&i) = indices.iter().find(|&&i| i >= ds.len()) {
        return Err(CliError::Usage(format!("sample index {i} out of range ({} samples)", ds.len())));
    }
    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    for &i in indices {
        let s = &ds.samples[i];
        let p = out_dir.join(format!("sample{i:06}_label{}_sweep{}.pgm", s.label, s.sweep_index));
        write_pgm(&p, ds.width, ds.height, &to_gray8(&s.pixels))?;
        m.output(&p)?;
    }
    m.finish(&out_dir.join("manifest.json"))
}
