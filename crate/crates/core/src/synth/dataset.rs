use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Normalization, ScenarioConfig};
use crate::container;
use crate::error::{Error, Result};
use crate::learn::Examples;

const MAGIC: &[u8; 4] = b"SPKL";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub generator: String,
    pub master_seed: u64,
    pub per_class: usize,
    /// Size of the digit pool the samples were drawn from.
    pub source_digits: usize,
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(master_seed: u64, per_class: usize, source_digits: usize) -> Self {
        Self {
            generator: concat!("speckle-core ", env!("CARGO_PKG_VERSION")).into(),
            master_seed,
            per_class,
            source_digits,
            notes: vec![
                "sample counts and sweep step counts are tool defaults, not lab values".into(),
                "digits are the first per_class of each class in source order".into(),
            ],
        }
    }
}

/// One preprocessed sensor frame. `digit` is the index in the source digit
/// set, shared by every sweep-point variant of the same digit.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: u8,
    pub sweep_index: u16,
    pub digit: u32,
    pub pixels: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleDataset {
    pub config: ScenarioConfig,
    pub provenance: Provenance,
    pub width: usize,
    pub height: usize,
    pub samples: Vec<Sample>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: ScenarioConfig,
    provenance: Provenance,
    width: usize,
    height: usize,
    bit_depth: Option<u8>,
    digits: Vec<u32>,
}

impl SpeckleDataset {
    pub fn new(
        config: ScenarioConfig,
        provenance: Provenance,
        width: usize,
        height: usize,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        let ds = Self {
            config,
            provenance,
            width,
            height,
            samples,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Bit depth of quantized datasets; `None` for standardized frames.
    pub fn bit_depth(&self) -> Option<u8> {
        match self.config.preprocessing.normalization {
            Normalization::Quantize { bits } => Some(bits),
            Normalization::Standardize => None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sweep_len(&self) -> usize {
        self.config.sweep.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.width * self.height;
        if n == 0 {
            return Err(Error::Shape("dataset frames must be nonempty".into()));
        }
        let top = self.bit_depth().map(|b| ((1u32 << b) - 1) as f32);
        for (i, s) in self.samples.iter().enumerate() {
            if s.pixels.len() != n {
                return Err(Error::Shape(format!("sample {i} has {} pixels, expected {n}", s.pixels.len())));
            }
            if s.label > 9 {
                return Err(Error::Argument(format!("sample {i} has label {}", s.label)));
            }
            if s.sweep_index as usize >= self.config.sweep.len() {
                return Err(Error::Argument(format!("sample {i} has sweep index {}", s.sweep_index)));
            }
            if let Some(top) = top {
                if s.pixels.iter().any(|&v| !(0.0..=top).contains(&v) || v.fract() != 0.0) {
                    return Err(Error::Argument(format!("sample {i} holds non-integer levels")));
                }
            } else if s.pixels.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("sample {i} holds non-finite values")));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            config: self.config.clone(),
            provenance: self.provenance.clone(),
            width: self.width,
            height: self.height,
            bit_depth: self.bit_depth(),
            digits: self.samples.iter().map(|s| s.digit).collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
        let px = self.width * self.height;
        let width = if header.bit_depth.is_some() { 2 } else { 4 };
        let mut payload = Vec::with_capacity(self.samples.len() * (3 + width * px));
        for s in &self.samples {
            payload.push(s.label);
            payload.extend_from_slice(&s.sweep_index.to_le_bytes());
            match header.bit_depth {
                Some(_) => s
                    .pixels
                    .iter()
                    .for_each(|&v| payload.extend_from_slice(&(v as u16).to_le_bytes())),
                None => s.pixels.iter().for_each(|v| payload.extend_from_slice(&v.to_le_bytes())),
            }
        }
        Ok(container::encode(MAGIC, DATASET_VERSION, &json, &payload))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (h, payload) = container::decode(bytes, MAGIC, DATASET_VERSION)?;
        let header: Header =
            serde_json::from_slice(h).map_err(|e| Error::Format(format!("dataset header: {e}")))?;
        let expected_depth = match header.config.preprocessing.normalization {
            Normalization::Quantize { bits } => Some(bits),
            Normalization::Standardize => None,
        };
        if header.bit_depth != expected_depth {
            return Err(Error::Format("bit depth disagrees with the preprocessing mode".into()));
        }
        let px = header.width * header.height;
        let width = if header.bit_depth.is_some() { 2 } else { 4 };
        let record = 3 + width * px;
        if payload.len() != record * header.digits.len() {
            return Err(Error::Corruption(format!(
                "payload holds {} bytes, header describes {} samples of {record}",
                payload.len(),
                header.digits.len()
            )));
        }
        let samples = payload
            .chunks_exact(record)
            .zip(&header.digits)
            .map(|(r, &digit)| Sample {
                label: r[0],
                sweep_index: u16::from_le_bytes([r[1], r[2]]),
                digit,
                pixels: if width == 2 {
                    r[3..].chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]) as f32).collect()
                } else {
                    r[3..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()
                },
            })
            .collect();
        Self::new(header.config, header.provenance, header.width, header.height, samples)
    }

    /// Samples at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            config: self.config.clone(),
            provenance: self.provenance.clone(),
            width: self.width,
            height: self.height,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Samples recorded at one sweep point.
    pub fn sweep_subset(&self, sweep_index: u16) -> Self {
        let idx: Vec<usize> = (0..self.samples.len())
            .filter(|&i| self.samples[i].sweep_index == sweep_index)
            .collect();
        self.select(&idx)
    }

    /// Classifier inputs; quantized levels are scaled to [0, 1]. Groups are
    /// sweep indices.
    pub fn to_examples(&self) -> Result<Examples> {
        let scale = self.bit_depth().map_or(1.0, |b| 1.0 / ((1u32 << b) - 1) as f32);
        let mut inputs = Vec::with_capacity(self.samples.len() * self.width * self.height);
        for s in &self.samples {
            inputs.extend(s.pixels.iter().map(|v| v * scale));
        }
        Examples::new(
            self.width * self.height,
            inputs,
            self.samples.iter().map(|s| s.label).collect(),
            self.samples.iter().map(|s| s.sweep_index).collect(),
        )
    }

    /// Distinct digit identities present.
    pub fn digit_ids(&self) -> BTreeSet<u32> {
        self.samples.iter().map(|s| s.digit).collect()
    }
}

pub fn save_dataset(ds: &SpeckleDataset, path: &Path) -> Result<()> {
    std::fs::write(path, ds.to_bytes()?)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<SpeckleDataset> {
    SpeckleDataset::from_bytes(&std::fs::read(path)?)
}

/// Train/test split stratified by label, keeping every sweep-point variant
/// of a digit on the same side.
pub fn split(ds: &SpeckleDataset, train_fraction: f64, seed: u64) -> Result<(SpeckleDataset, SpeckleDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut by_class: [BTreeSet<u32>; 10] = Default::default();
    let mut owner: BTreeMap<u32, u8> = BTreeMap::new();
    for s in &ds.samples {
        if let Some(&l) = owner.get(&s.digit) {
            if l != s.label {
                return Err(Error::Split(format!("digit {} carries labels {l} and {}", s.digit, s.label)));
            }
        }
        owner.insert(s.digit, s.label);
        by_class[s.label as usize].insert(s.digit);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_ids: BTreeSet<u32> = BTreeSet::new();
    for (c, ids) in by_class.iter().enumerate() {
        if ids.len() < 2 {
            return Err(Error::Split(format!("class {c} has {} digits, need at least 2", ids.len())));
        }
        let mut ids: Vec<u32> = ids.iter().copied().collect();
        ids.shuffle(&mut rng);
        let n = ids.len();
        let k = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        train_ids.extend(&ids[..k]);
    }
    let (tr, te): (Vec<usize>, Vec<usize>) =
        (0..ds.samples.len()).partition(|&i| train_ids.contains(&ds.samples[i].digit));
    Ok((ds.select(&tr), ds.select(&te)))
}
