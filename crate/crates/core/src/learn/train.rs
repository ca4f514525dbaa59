use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::evaluate;
use super::net::{accumulate, zero_grads, Evaluator, Gradients, NetworkParams};
use crate::error::{Error, Result};

/// Labeled network inputs. `groups` tags each sample (sweep-point index) for
/// per-group evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Examples {
    pub input_len: usize,
    pub inputs: Vec<f32>,
    pub labels: Vec<u8>,
    pub groups: Vec<u16>,
}

impl Examples {
    pub fn new(input_len: usize, inputs: Vec<f32>, labels: Vec<u8>, groups: Vec<u16>) -> Result<Self> {
        if input_len == 0 || inputs.len() != input_len * labels.len() || groups.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} inputs, {} labels and {} groups do not match input size {input_len}",
                inputs.len(),
                labels.len(),
                groups.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::Argument(format!("label {l} outside 0..=9")));
        }
        Ok(Self {
            input_len,
            inputs,
            labels,
            groups,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.input_len..(i + 1) * self.input_len]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_len);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
        }
        Self {
            input_len: self.input_len,
            inputs,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    /// Split each batch into fixed chunks evaluated on the rayon pool. The
    /// result does not depend on the thread count but differs in rounding
    /// from serial mode.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
            patience: 8,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Argument("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!("learning rate {} must be nonnegative", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Argument(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy.
    pub params: NetworkParams<f32>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

const CHUNK: usize = 16;

fn batch_grads(
    params: &NetworkParams<f32>,
    set: &Examples,
    batch: &[usize],
    parallel: bool,
) -> Result<(f64, usize, Gradients<f32>)> {
    let scale = 1.0 / batch.len() as f32;
    let run = |idx: &[usize]| -> Result<(f64, usize, Gradients<f32>)> {
        let mut ev = Evaluator::new(params)?;
        let mut g = zero_grads(params);
        let mut x = Vec::with_capacity(idx.len() * set.input_len);
        for &i in idx {
            x.extend_from_slice(set.input(i));
        }
        let labels: Vec<u8> = idx.iter().map(|&i| set.labels[i]).collect();
        let (l, c) = accumulate(&mut ev, &x, &labels, scale, &mut g);
        Ok((l, c, g))
    };
    if !parallel {
        return run(batch);
    }
    let parts: Vec<_> = batch.par_chunks(CHUNK).map(run).collect::<Result<_>>()?;
    let mut it = parts.into_iter();
    let (mut loss, mut correct, mut grads) = it.next().unwrap();
    for (l, c, g) in it {
        loss += l;
        correct += c;
        for (a, b) in grads.iter_mut().zip(&g) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }
    Ok((loss, correct, grads))
}

/// Mini-batch SGD with momentum (`v = μ v + g; w -= η v`) over seeded
/// shuffles, keeping the parameters of the best validation epoch.
pub fn train(
    params: &NetworkParams<f32>,
    train_set: &Examples,
    val_set: &Examples,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    params.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Argument("training and validation sets must be nonempty".into()));
    }
    let input_len = params.architecture.input_len();
    if train_set.input_len != input_len || val_set.input_len != input_len {
        return Err(Error::Shape(format!(
            "examples have {} inputs, network expects {input_len}",
            train_set.input_len
        )));
    }

    let mut current = params.clone();
    let mut velocity = zero_grads(params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best = (f64::NEG_INFINITY, 0usize, current.clone());
    let (lr, mu) = (cfg.learning_rate as f32, cfg.momentum as f32);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, c, grads) = batch_grads(&current, train_set, batch, cfg.parallel)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    reason: "training loss is not finite".into(),
                });
            }
            loss_sum += loss;
            correct += c;
            for ((p, v), g) in current.layers.iter_mut().zip(&mut velocity).zip(&grads) {
                for ((w, vw), gw) in p.weights.iter_mut().zip(&mut v.weights).zip(&g.weights) {
                    *vw = mu * *vw + gw;
                    *w -= lr * *vw;
                }
                for ((b, vb), gb) in p.bias.iter_mut().zip(&mut v.bias).zip(&g.bias) {
                    *vb = mu * *vb + gb;
                    *b -= lr * *vb;
                }
            }
            if !current.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    reason: "parameters became non-finite".into(),
                });
            }
        }
        let val_acc = evaluate(&current, val_set)?.accuracy;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            val_acc,
        });
        if val_acc > best.0 {
            best = (val_acc, epoch, current.clone());
        } else if cfg.patience > 0 && epoch - best.1 >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        params: best.2,
        history,
        best_epoch: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{init_network, Architecture};

    fn toy(n: usize, seed: u64) -> Examples {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let l = (i % 10) as u8;
            for p in 0..16 {
                let on = if p == l as usize { 1.0 } else { 0.0 };
                inputs.push(on + 0.1 * rng.gen::<f32>());
            }
            labels.push(l);
        }
        Examples::new(16, inputs, labels, vec![0; n]).unwrap()
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let arch = Architecture::mlp(4, 4, 8);
        let p = init_network::<f32>(&arch, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            learning_rate: 0.0,
            patience: 0,
            ..Default::default()
        };
        let out = train(&p, &toy(40, 1), &toy(20, 2), &cfg).unwrap();
        assert_eq!(out.params, p);
        assert_eq!(out.history.len(), 3);
        let l0 = out.history[0].train_loss;
        for h in &out.history {
            assert!((h.train_loss - l0).abs() < 1e-6 * l0);
            assert_eq!(h.val_acc, out.history[0].val_acc);
        }
    }

    #[test]
    fn serial_training_is_reproducible() {
        let arch = Architecture::mlp(4, 4, 8);
        let p = init_network::<f32>(&arch, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 8,
            ..Default::default()
        };
        let a = train(&p, &toy(60, 1), &toy(20, 2), &cfg).unwrap();
        let b = train(&p, &toy(60, 1), &toy(20, 2), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn divergence_reports_epoch() {
        let arch = Architecture::mlp(4, 4, 8);
        let p = init_network::<f32>(&arch, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 4,
            learning_rate: 1e30,
            momentum: 0.0,
            ..Default::default()
        };
        match train(&p, &toy(40, 1), &toy(10, 2), &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_sets_and_bad_config() {
        let arch = Architecture::mlp(4, 4, 8);
        let p = init_network::<f32>(&arch, 3).unwrap();
        let empty = Examples::new(16, vec![], vec![], vec![]).unwrap();
        assert!(train(&p, &empty, &toy(10, 2), &TrainConfig::default()).is_err());
        let bad = TrainConfig {
            momentum: 1.0,
            ..Default::default()
        };
        assert!(train(&p, &toy(10, 1), &toy(10, 2), &bad).is_err());
    }
}
