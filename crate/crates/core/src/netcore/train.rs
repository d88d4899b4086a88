use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{clip_norm, NetworkModel, Normalizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain gradient descent.
    Gd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// N_ET.
    pub epochs: usize,
    /// R_T.
    pub lr: f64,
    pub lr_drop_fraction: f64,
    pub lr_drop_factor: f64,
    /// Gradient norm clip in normalized units.
    pub grad_clip: f64,
    pub seed: u64,
    /// Minibatch size; 0 means full batch.
    pub batch_size: usize,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5000,
            lr: 4e-3,
            lr_drop_fraction: 2.0 / 3.0,
            lr_drop_factor: 10.0,
            grad_clip: 5.0,
            seed: 0,
            batch_size: 32,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let drop_at = (self.lr_drop_fraction * self.epochs as f64).floor() as usize;
        if epoch >= drop_at {
            self.lr / self.lr_drop_factor
        } else {
            self.lr
        }
    }
}

/// Supervised windows (row-major, seq_len x n_features each) and targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub window_len: usize,
    pub n_outputs: usize,
    pub windows: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(window_len: usize, n_outputs: usize) -> Self {
        Self {
            window_len,
            n_outputs,
            windows: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn push(&mut self, window: &[f64], target: &[f64]) {
        debug_assert_eq!(window.len(), self.window_len);
        debug_assert_eq!(target.len(), self.n_outputs);
        self.windows.extend_from_slice(window);
        self.targets.extend_from_slice(target);
    }

    pub fn len(&self) -> usize {
        if self.window_len == 0 {
            0
        } else {
            self.windows.len() / self.window_len
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn window(&self, i: usize) -> &[f64] {
        &self.windows[i * self.window_len..(i + 1) * self.window_len]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.n_outputs..(i + 1) * self.n_outputs]
    }

    /// Input and output normalizers fitted on this data.
    pub fn fit_normalizers(&self, n_features: usize) -> Result<(Normalizer, Normalizer)> {
        Ok((
            Normalizer::fit(&self.windows, n_features)?,
            Normalizer::fit(&self.targets, self.n_outputs)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epoch whose parameters were kept; `None` keeps the starting point.
    pub best_epoch: Option<usize>,
    pub initial_val: f64,
    pub best_val: f64,
}

struct Prepared {
    xn: Vec<Vec<f64>>,
    zt: Vec<Vec<f64>>,
}

fn prepare(model: &NetworkModel, data: &Dataset) -> Prepared {
    let no = model.spec.n_outputs;
    Prepared {
        xn: (0..data.len()).map(|i| model.normalize_window(data.window(i))).collect(),
        zt: (0..data.len())
            .map(|i| (0..no).map(|o| model.out_norm.normalize(o, data.target(i)[o])).collect())
            .collect(),
    }
}

fn sample_loss(z: &[f64], zt: &[f64]) -> f64 {
    z.iter().zip(zt).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / z.len() as f64
}

fn prepared_loss(model: &NetworkModel, data: &Prepared) -> f64 {
    if data.xn.is_empty() {
        return f64::NAN;
    }
    let total: f64 = data
        .xn
        .iter()
        .zip(&data.zt)
        .map(|(x, zt)| sample_loss(&model.forward_normalized(x.clone()).z, zt))
        .sum();
    total / data.xn.len() as f64
}

/// Mean squared error in normalized output space.
pub fn evaluate_loss(model: &NetworkModel, data: &Dataset) -> f64 {
    prepared_loss(model, &prepare(model, data))
}

/// Minibatch training on normalized MSE with norm clipping and a step drop of
/// the learning rate. The parameters with the lowest validation loss (training
/// loss when `val` is empty) are returned; the starting parameters count as a
/// candidate, so the result is never worse than the input on that measure.
pub fn train(
    model: &NetworkModel,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<(NetworkModel, TrainHistory)> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train_set.window_len != model.spec.window_len() || train_set.n_outputs != model.spec.n_outputs {
        return Err(Error::Shape {
            expected: format!("windows of {} and {} targets", model.spec.window_len(), model.spec.n_outputs),
            given: format!("windows of {} and {} targets", train_set.window_len, train_set.n_outputs),
        });
    }
    let tr = prepare(model, train_set);
    let va = prepare(model, val_set);
    let use_val = !va.xn.is_empty();
    let score = |m: &NetworkModel| if use_val { prepared_loss(m, &va) } else { prepared_loss(m, &tr) };

    let mut current = model.clone();
    let mut best = model.clone();
    let initial = score(model);
    let mut hist = TrainHistory {
        initial_val: initial,
        best_val: if initial.is_finite() { initial } else { f64::INFINITY },
        ..TrainHistory::default()
    };
    let n = tr.xn.len();
    let batch = if cfg.batch_size == 0 { n } else { cfg.batch_size.min(n) };
    let np = current.params.len();
    let mut m1 = vec![0.0; np];
    let mut m2 = vec![0.0; np];
    let mut step = 0i32;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let no = current.spec.n_outputs as f64;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grad = vec![0.0; np];
            for &i in chunk {
                let tape = current.forward_normalized(tr.xn[i].clone());
                let zt = &tr.zt[i];
                epoch_loss += sample_loss(&tape.z, zt);
                let dz: Vec<f64> = tape
                    .z
                    .iter()
                    .zip(zt)
                    .map(|(z, t)| 2.0 * (z - t) / (no * chunk.len() as f64))
                    .collect();
                let g = current.backward(&tape, &dz, true, false).params.expect("requested");
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            clip_norm(&mut grad, cfg.grad_clip);
            match cfg.optimizer {
                Optimizer::Gd => {
                    for (p, g) in current.params.iter_mut().zip(&grad) {
                        *p -= lr * g;
                    }
                }
                Optimizer::Adam => {
                    step += 1;
                    let (b1, b2) = (0.9f64, 0.999f64);
                    let c1 = 1.0 - b1.powi(step);
                    let c2 = 1.0 - b2.powi(step);
                    for k in 0..np {
                        m1[k] = b1 * m1[k] + (1.0 - b1) * grad[k];
                        m2[k] = b2 * m2[k] + (1.0 - b2) * grad[k] * grad[k];
                        current.params[k] -= lr * (m1[k] / c1) / ((m2[k] / c2).sqrt() + 1e-8);
                    }
                }
            }
        }
        let train_loss = epoch_loss / n as f64;
        if !train_loss.is_finite() || current.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        let val = if use_val { prepared_loss(&current, &va) } else { prepared_loss(&current, &tr) };
        if !val.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        hist.train_loss.push(train_loss);
        hist.val_loss.push(val);
        if val < hist.best_val {
            hist.best_val = val;
            hist.best_epoch = Some(epoch);
            best.params.clone_from(&current.params);
        }
    }
    log::debug!(
        "trained {} epochs: val {:.3e} -> {:.3e} (best epoch {:?})",
        cfg.epochs,
        hist.initial_val,
        hist.best_val,
        hist.best_epoch
    );
    Ok((best, hist))
}
