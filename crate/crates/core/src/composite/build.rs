use serde::{Deserialize, Serialize};

use super::{rollout_closed, CompositeModel, HistoryBuffer, Role, Signal, Topology};
use crate::error::{Error, Result};
use crate::metrics::nrmse;
use crate::netcore::{train, Dataset, NetworkModel, NetworkSpec, TrainConfig};
use crate::online::{DataStore, Split, Timeline};
use crate::profile::{DayProfile, HOURS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeConfig {
    pub topology: Topology,
    /// L_P.
    pub seq_len: usize,
    /// Hidden layers of the thermostat, heat-pump and envelope networks. Merged
    /// networks take the envelope entry.
    pub n_layers: [usize; 3],
    pub n_hidden: [usize; 3],
    pub train: TrainConfig,
    pub seed: u64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        Self {
            topology: Topology::ThreeNets,
            seq_len: 24,
            n_layers: [3, 4, 3],
            n_hidden: [15, 20, 20],
            train: TrainConfig::default(),
            seed: 0,
            p_min: 0.0,
            p_max: 50.0,
        }
    }
}

impl CompositeConfig {
    /// Desk-scale preset used by the tests and the default CLI run.
    pub fn desk() -> Self {
        Self {
            seq_len: 8,
            n_layers: [1, 1, 1],
            n_hidden: [10, 8, 10],
            train: TrainConfig {
                epochs: 500,
                lr: 4e-3,
                ..TrainConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn spec(&self, role: Role) -> NetworkSpec {
        let i = match role {
            Role::Thermostat => 0,
            Role::HeatPump => 1,
            Role::Envelope | Role::HvacEnvelope | Role::Joint => 2,
        };
        NetworkSpec {
            n_features: role.features().len(),
            n_layers: self.n_layers[i],
            n_hidden: self.n_hidden[i],
            seq_len: self.seq_len,
            n_outputs: role.outputs().len(),
        }
    }
}

fn timeline_get(tl: &Timeline, s: Signal, idx: usize) -> f64 {
    match s {
        Signal::TSet => tl.t_set[idx],
        Signal::Power => tl.p[idx],
        Signal::Cooling => tl.q[idx],
        Signal::TIndoor => tl.t_indoor[idx],
        Signal::TOut => tl.t_out[idx],
        Signal::TAdj => tl.t_adj[idx],
        Signal::TEvap => tl.t_evap[idx],
        Signal::QInternal => tl.q_internal[idx],
    }
}

/// Teacher-forced samples of `role` for the rows of `split`.
pub fn build_dataset(store: &DataStore, role: Role, seq_len: usize, split: Split) -> Result<Dataset> {
    if seq_len > HOURS {
        return Err(Error::MissingHistory {
            needed: seq_len,
            available: HOURS,
        });
    }
    let tl = store.timeline();
    let feats = role.features().len();
    let mut data = Dataset::new(seq_len * feats, role.outputs().len());
    for r in store.rows(split) {
        push_row(&mut data, tl, role, seq_len, r);
    }
    Ok(data)
}

fn push_row(data: &mut Dataset, tl: &Timeline, role: Role, seq_len: usize, row: usize) {
    let k = HOURS + row;
    let w = super::window_at(role, seq_len, k, |s, i| timeline_get(tl, s, i));
    let y: Vec<f64> = role.outputs().iter().map(|&s| timeline_get(tl, s, k)).collect();
    data.push(&w, &y);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetTrainReport {
    pub role: Role,
    pub train_rows: usize,
    pub initial_val: f64,
    pub best_val: f64,
    pub best_epoch: Option<usize>,
}

fn role_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9).wrapping_add(1 + i as u64)
}

/// Fits normalizers on the training split and trains every network of the
/// configured topology from a seeded initialization.
pub fn build_ablation(store: &DataStore, cfg: &CompositeConfig) -> Result<(CompositeModel, Vec<NetTrainReport>)> {
    let mut nets = Vec::new();
    let mut reports = Vec::new();
    for (i, &role) in cfg.topology.roles().iter().enumerate() {
        let spec = cfg.spec(role);
        let tr = build_dataset(store, role, cfg.seq_len, Split::Train)?;
        let va = build_dataset(store, role, cfg.seq_len, Split::Val)?;
        let (in_norm, out_norm) = tr.fit_normalizers(spec.n_features)?;
        let mut net = NetworkModel::new(spec, role_seed(cfg.seed, i))?;
        net.in_norm = in_norm;
        net.out_norm = out_norm;
        let tcfg = TrainConfig {
            seed: role_seed(cfg.train.seed ^ cfg.seed, i),
            ..cfg.train
        };
        let (trained, hist) = train(&net, &tr, &va, &tcfg)?;
        reports.push(NetTrainReport {
            role,
            train_rows: tr.len(),
            initial_val: hist.initial_val,
            best_val: hist.best_val,
            best_epoch: hist.best_epoch,
        });
        nets.push(trained);
    }
    Ok((CompositeModel::new(cfg.topology, nets, cfg.p_min, cfg.p_max)?, reports))
}

/// Extra weight on recent days during warm retraining: the training windows
/// of the last `days` days are repeated `copies` more times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Replay {
    pub days: usize,
    pub copies: usize,
}

/// Warm-start retraining on the current splits. Normalizer ranges only grow,
/// and the weights are rescaled so that growing them leaves the network
/// function unchanged before training resumes.
pub fn retrain_composite(
    model: &CompositeModel,
    store: &DataStore,
    warm: &TrainConfig,
    replay: &Replay,
) -> Result<(CompositeModel, Vec<NetTrainReport>)> {
    let mut nets = Vec::new();
    let mut reports = Vec::new();
    for (i, (&role, net)) in model.topology.roles().iter().zip(&model.nets).enumerate() {
        let lp = net.spec.seq_len;
        let mut tr = build_dataset(store, role, lp, Split::Train)?;
        let first = store.n_rows().saturating_sub(replay.days * HOURS);
        for r in store.rows(Split::Train).into_iter().filter(|&r| r >= first) {
            for _ in 0..replay.copies {
                push_row(&mut tr, store.timeline(), role, lp, r);
            }
        }
        let va = build_dataset(store, role, lp, Split::Val)?;
        let (fit_in, fit_out) = tr.fit_normalizers(net.spec.n_features)?;
        let mut in_norm = net.in_norm.clone();
        let mut out_norm = net.out_norm.clone();
        let grew = in_norm.expand(&fit_in) | out_norm.expand(&fit_out);
        let start = if grew {
            net.with_normalizers(in_norm, out_norm)
        } else {
            net.clone()
        };
        let tcfg = TrainConfig {
            seed: role_seed(warm.seed, i),
            ..*warm
        };
        let (trained, hist) = train(&start, &tr, &va, &tcfg)?;
        reports.push(NetTrainReport {
            role,
            train_rows: tr.len(),
            initial_val: hist.initial_val,
            best_val: hist.best_val,
            best_epoch: hist.best_epoch,
        });
        nets.push(trained);
    }
    Ok((CompositeModel::new(model.topology, nets, model.p_min, model.p_max)?, reports))
}

/// A recorded day with the day before it as history source.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCase {
    pub prelude: DayProfile,
    pub day: DayProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrmseTriple {
    pub p: f64,
    /// NaN when the topology has no heat-pump network.
    pub q: f64,
    pub t_indoor: f64,
}

/// Closed-loop nRMSE of P, Q and T_i pooled over `cases`.
pub fn closed_loop_nrmse(model: &CompositeModel, cases: &[EvalCase]) -> Result<NrmseTriple> {
    let mut act = [Vec::new(), Vec::new(), Vec::new()];
    let mut est = [Vec::new(), Vec::new(), Vec::new()];
    for c in cases {
        let hist = HistoryBuffer::from_day(&c.prelude, model.history_len())?;
        let pred = rollout_closed(model, &c.day.t_set, &c.day.env, &hist)?;
        act[0].extend_from_slice(&c.day.p);
        est[0].extend_from_slice(&pred.p);
        if let Some(q) = pred.q {
            act[1].extend_from_slice(&c.day.q);
            est[1].extend_from_slice(&q);
        }
        act[2].extend_from_slice(&c.day.t_indoor);
        est[2].extend_from_slice(&pred.t_indoor);
    }
    if act[0].is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(NrmseTriple {
        p: nrmse(&act[0], &est[0]),
        q: if act[1].is_empty() { f64::NAN } else { nrmse(&act[1], &est[1]) },
        t_indoor: nrmse(&act[2], &est[2]),
    })
}
