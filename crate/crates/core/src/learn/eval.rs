use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arch::CLASSES;
use super::net::{argmax, Evaluator, NetworkParams};
use super::train::Examples;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub group: u16,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

/// Accuracy, confusion matrix (rows = true class, columns = prediction) and
/// per-group breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub total: u64,
    pub confusion: [[u64; CLASSES]; CLASSES],
    pub per_group: Vec<GroupAccuracy>,
}

impl EvalReport {
    pub fn correct(&self) -> u64 {
        (0..CLASSES).map(|c| self.confusion[c][c]).sum()
    }

    pub fn group(&self, group: u16) -> Option<&GroupAccuracy> {
        self.per_group.iter().find(|g| g.group == group)
    }
}

/// Argmax class of every sample.
pub fn predict(params: &NetworkParams<f32>, set: &Examples) -> Result<Vec<u8>> {
    if set.input_len != params.architecture.input_len() {
        return Err(Error::Shape(format!(
            "examples have {} inputs, network expects {}",
            set.input_len,
            params.architecture.input_len()
        )));
    }
    params.validate()?;
    const CHUNK: usize = 256;
    let parts: Vec<Vec<u8>> = set
        .inputs
        .par_chunks(CHUNK * set.input_len)
        .map(|chunk| {
            let mut ev = Evaluator::new(params).expect("validated params");
            chunk
                .chunks_exact(set.input_len)
                .map(|x| argmax(ev.forward(x)) as u8)
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

pub fn evaluate(params: &NetworkParams<f32>, set: &Examples) -> Result<EvalReport> {
    if set.is_empty() {
        return Err(Error::Argument("evaluation set is empty".into()));
    }
    let pred = predict(params, set)?;
    Ok(report(&set.labels, &pred, &set.groups))
}

/// Builds a report from true labels, predictions and group tags.
pub fn report(labels: &[u8], predictions: &[u8], groups: &[u16]) -> EvalReport {
    let mut confusion = [[0u64; CLASSES]; CLASSES];
    let mut per: std::collections::BTreeMap<u16, (u64, u64)> = Default::default();
    for ((&y, &p), &g) in labels.iter().zip(predictions).zip(groups) {
        confusion[y as usize][p as usize] += 1;
        let e = per.entry(g).or_default();
        e.1 += 1;
        if y == p {
            e.0 += 1;
        }
    }
    let total = labels.len() as u64;
    let correct: u64 = (0..CLASSES).map(|c| confusion[c][c]).sum();
    EvalReport {
        accuracy: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
        total,
        confusion,
        per_group: per
            .into_iter()
            .map(|(group, (correct, total))| GroupAccuracy {
                group,
                correct,
                total,
                accuracy: correct as f64 / total as f64,
            })
            .collect(),
    }
}
