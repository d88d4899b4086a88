//! The interconnected thermostat (L1), heat-pump (L2) and envelope (L3)
//! networks with their feedback wiring, plus the merged two- and one-network
//! variants.

mod build;
mod rollout;

pub use build::{
    build_ablation, build_dataset, closed_loop_nrmse, retrain_composite, CompositeConfig, EvalCase, NetTrainReport, Replay,
    NrmseTriple,
};
pub use rollout::{rollout_closed, rollout_grad, rollout_open, rollout_tape, Jacobians, Predictions, RolloutTape};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{checkpoint, NetworkModel, Tape};
use crate::online::Timeline;
use crate::profile::{DayProfile, Environment, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    ThreeNets,
    /// Thermostat network plus a merged heat-pump/envelope network.
    TwoNets,
    /// One network mapping set-points and environment to (P, T_i).
    OneNet,
}

impl std::str::FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "three_nets" | "3" => Ok(Self::ThreeNets),
            "two_nets" | "2" => Ok(Self::TwoNets),
            "one_net" | "1" => Ok(Self::OneNet),
            other => Err(format!("unknown topology `{other}` (three_nets | two_nets | one_net)")),
        }
    }
}

impl Topology {
    pub fn roles(self) -> &'static [Role] {
        match self {
            Topology::ThreeNets => &[Role::Thermostat, Role::HeatPump, Role::Envelope],
            Topology::TwoNets => &[Role::Thermostat, Role::HvacEnvelope],
            Topology::OneNet => &[Role::Joint],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::ThreeNets => "three_nets",
            Topology::TwoNets => "two_nets",
            Topology::OneNet => "one_net",
        }
    }
}

/// Hourly signals carried through windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signal {
    TSet,
    Power,
    Cooling,
    TIndoor,
    TOut,
    TAdj,
    TEvap,
    QInternal,
}

pub const N_SIGNALS: usize = 8;

impl Signal {
    fn index(self) -> usize {
        self as usize
    }

    /// Signals that the composite predicts during a closed rollout.
    pub fn is_predicted(self) -> bool {
        matches!(self, Signal::Power | Signal::Cooling | Signal::TIndoor)
    }
}

/// One window column: `signal` taken `lag` hours before the window step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feature {
    pub signal: Signal,
    pub lag: usize,
}

const fn f(signal: Signal, lag: usize) -> Feature {
    Feature { signal, lag }
}

use Signal::*;
const THERMOSTAT: &[Feature] = &[f(TSet, 0), f(Power, 1), f(TIndoor, 1)];
const HEAT_PUMP: &[Feature] = &[f(Power, 0), f(TOut, 0), f(TEvap, 0)];
const ENVELOPE: &[Feature] = &[f(Cooling, 0), f(TOut, 0), f(TAdj, 0), f(TEvap, 0), f(QInternal, 0), f(TIndoor, 1)];
const HVAC_ENVELOPE: &[Feature] = &[f(Power, 0), f(TOut, 0), f(TAdj, 0), f(TEvap, 0), f(QInternal, 0), f(TIndoor, 1)];
const JOINT: &[Feature] = &[f(TSet, 0), f(TOut, 0), f(TAdj, 0), f(TEvap, 0), f(QInternal, 0), f(TIndoor, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Thermostat,
    HeatPump,
    Envelope,
    HvacEnvelope,
    Joint,
}

impl Role {
    /// Per-step columns. A window for target hour t covers steps
    /// s = t - L_P + 1 ..= t.
    pub fn features(self) -> &'static [Feature] {
        match self {
            Role::Thermostat => THERMOSTAT,
            Role::HeatPump => HEAT_PUMP,
            Role::Envelope => ENVELOPE,
            Role::HvacEnvelope => HVAC_ENVELOPE,
            Role::Joint => JOINT,
        }
    }

    pub fn outputs(self) -> &'static [Signal] {
        match self {
            Role::Thermostat => &[Signal::Power],
            Role::HeatPump => &[Signal::Cooling],
            Role::Envelope | Role::HvacEnvelope => &[Signal::TIndoor],
            Role::Joint => &[Signal::Power, Signal::TIndoor],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Thermostat => "thermostat",
            Role::HeatPump => "heat_pump",
            Role::Envelope => "envelope",
            Role::HvacEnvelope => "hvac_envelope",
            Role::Joint => "joint",
        }
    }
}

/// Any hourly predictor that exposes input gradients.
pub trait Predictor {
    type Tape;
    fn seq_len(&self) -> usize;
    fn run(&self, window: &[f64]) -> Result<(Vec<f64>, Self::Tape)>;
    fn input_grad(&self, tape: &Self::Tape, upstream: &[f64]) -> Vec<f64>;
}

impl Predictor for NetworkModel {
    type Tape = Tape;

    fn seq_len(&self) -> usize {
        self.spec.seq_len
    }

    fn run(&self, window: &[f64]) -> Result<(Vec<f64>, Tape)> {
        let tape = self.forward_tape(window)?;
        Ok((tape.y.clone(), tape))
    }

    fn input_grad(&self, tape: &Tape, upstream: &[f64]) -> Vec<f64> {
        self.backward_inputs(tape, upstream)
    }
}

/// Networks wired per `topology`, one per role in `topology.roles()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite<N = NetworkModel> {
    pub topology: Topology,
    pub nets: Vec<N>,
    /// Power bounds applied to predicted P before it is fed back.
    pub p_min: f64,
    pub p_max: f64,
}

pub type CompositeModel = Composite<NetworkModel>;

impl<N: Predictor> Composite<N> {
    pub fn new(topology: Topology, nets: Vec<N>, p_min: f64, p_max: f64) -> Result<Self> {
        if nets.len() != topology.roles().len() {
            return Err(Error::Shape {
                expected: format!("{} networks for {}", topology.roles().len(), topology.name()),
                given: nets.len().to_string(),
            });
        }
        Ok(Self {
            topology,
            nets,
            p_min,
            p_max,
        })
    }

    /// Longest lag history any network needs.
    pub fn history_len(&self) -> usize {
        self.nets.iter().map(|n| n.seq_len()).max().unwrap_or(0)
    }
}

impl CompositeModel {
    pub fn net(&self, role: Role) -> Option<&NetworkModel> {
        self.topology.roles().iter().position(|&r| r == role).map(|i| &self.nets[i])
    }

    /// Structured description for run manifests.
    pub fn manifest(&self) -> serde_json::Value {
        let nets: Vec<serde_json::Value> = self
            .topology
            .roles()
            .iter()
            .zip(&self.nets)
            .map(|(role, net)| {
                serde_json::json!({
                    "role": role.name(),
                    "features": role.features().iter().map(|f| format!("{:?}[-{}]", f.signal, f.lag)).collect::<Vec<_>>(),
                    "outputs": role.outputs().iter().map(|s| format!("{s:?}")).collect::<Vec<_>>(),
                    "spec": net.spec,
                    "param_hash": format!("{:016x}", param_hash(&net.params)),
                    "in_norm": net.in_norm,
                    "out_norm": net.out_norm,
                })
            })
            .collect();
        serde_json::json!({
            "topology": self.topology.name(),
            "joint_head": if self.topology == Topology::OneNet { "single network, two-output head (P, T_i)" } else { "n/a" },
            "power_clamp": [self.p_min, self.p_max],
            "nets": nets,
        })
    }
}

/// FNV-1a over the parameter bit patterns.
pub fn param_hash(params: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in params {
        for b in p.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Actual signals of the hours preceding a rollout, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    len: usize,
    values: [Vec<f64>; N_SIGNALS],
}

impl HistoryBuffer {
    /// The `len` hours ending just before timeline index `end`.
    pub fn from_timeline(tl: &Timeline, end: usize, len: usize) -> Result<Self> {
        if end < len || end > tl.len() {
            return Err(Error::MissingHistory {
                needed: len,
                available: end.min(tl.len()),
            });
        }
        let r = end - len..end;
        Ok(Self {
            len,
            values: [
                tl.t_set[r.clone()].to_vec(),
                tl.p[r.clone()].to_vec(),
                tl.q[r.clone()].to_vec(),
                tl.t_indoor[r.clone()].to_vec(),
                tl.t_out[r.clone()].to_vec(),
                tl.t_adj[r.clone()].to_vec(),
                tl.t_evap[r.clone()].to_vec(),
                tl.q_internal[r].to_vec(),
            ],
        })
    }

    /// The last `len` hours of `day`.
    pub fn from_day(day: &DayProfile, len: usize) -> Result<Self> {
        Self::from_timeline(&Timeline::from_days([day]), HOURS, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn signal(&self, s: Signal) -> &[f64] {
        &self.values[s.index()]
    }

    /// Shifts in one hour of actual data, dropping the oldest.
    pub fn push(&mut self, t_set: f64, p: f64, q: f64, t_indoor: f64, env: &Environment) {
        let vals = [t_set, p, q, t_indoor, env.t_out, env.t_adj, env.t_evap, env.q_internal];
        for (buf, v) in self.values.iter_mut().zip(vals) {
            if !buf.is_empty() {
                buf.remove(0);
                buf.push(v);
            }
        }
    }
}

/// Per-signal series over history plus the rolled-out day.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Track {
    pub(crate) offset: usize,
    pub(crate) values: [Vec<f64>; N_SIGNALS],
}

impl Track {
    pub(crate) fn new(history: &HistoryBuffer, env: &[Environment; HOURS]) -> Self {
        let offset = history.len();
        let mut values: [Vec<f64>; N_SIGNALS] = std::array::from_fn(|i| {
            let mut v = history.values[i].clone();
            v.resize(offset + HOURS, 0.0);
            v
        });
        for (h, e) in env.iter().enumerate() {
            values[Signal::TOut.index()][offset + h] = e.t_out;
            values[Signal::TAdj.index()][offset + h] = e.t_adj;
            values[Signal::TEvap.index()][offset + h] = e.t_evap;
            values[Signal::QInternal.index()][offset + h] = e.q_internal;
        }
        Self { offset, values }
    }

    pub(crate) fn get(&self, s: Signal, idx: usize) -> f64 {
        self.values[s.index()][idx]
    }

    pub(crate) fn set(&mut self, s: Signal, idx: usize, v: f64) {
        self.values[s.index()][idx] = v;
    }
}

/// Window of `role` for the target at index `k` of `series`.
pub(crate) fn window_at(role: Role, seq_len: usize, k: usize, series: impl Fn(Signal, usize) -> f64) -> Vec<f64> {
    let feats = role.features();
    let mut w = Vec::with_capacity(seq_len * feats.len());
    for s in k + 1 - seq_len..=k {
        for ft in feats {
            w.push(series(ft.signal, s - ft.lag));
        }
    }
    w
}


const COMPOSITE_MAGIC: &str = "hvac-composite v1";
const NET_HEADER: &str = "hvac-lstm-checkpoint";

/// Header lines followed by one network checkpoint per role.
pub fn save_composite<W: std::io::Write>(model: &CompositeModel, mut out: W) -> Result<()> {
    writeln!(out, "{COMPOSITE_MAGIC}")?;
    writeln!(out, "topology {}", model.topology.name())?;
    writeln!(out, "p_min {}", model.p_min)?;
    writeln!(out, "p_max {}", model.p_max)?;
    for net in &model.nets {
        checkpoint::save(net, &mut out)?;
    }
    Ok(())
}

pub fn load_composite<R: std::io::Read>(mut input: R) -> Result<CompositeModel> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let lines: Vec<&str> = text.lines().collect();
    let bad = |line: usize, msg: String| Error::Parse { line, msg };
    if lines.first().map(|l| l.trim()) != Some(COMPOSITE_MAGIC) {
        return Err(bad(1, "not a composite checkpoint".into()));
    }
    let field = |i: usize, key: &str| -> Result<&str> {
        let l = lines.get(i).ok_or_else(|| bad(i + 1, format!("missing `{key}`")))?;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| bad(i + 1, format!("expected `{key}`")))
    };
    let topology: Topology = field(1, "topology")?.trim().parse().map_err(|e| bad(2, e))?;
    let num = |i: usize, key: &str| -> Result<f64> {
        field(i, key)?.trim().parse().map_err(|_| bad(i + 1, format!("bad `{key}`")))
    };
    let (p_min, p_max) = (num(2, "p_min")?, num(3, "p_max")?);
    let starts: Vec<usize> = (4..lines.len()).filter(|&i| lines[i].starts_with(NET_HEADER)).collect();
    let n = topology.roles().len();
    if starts.len() != n || starts.first() != Some(&4) {
        return Err(bad(5, format!("expected {n} network checkpoints")));
    }
    let nets = starts
        .iter()
        .enumerate()
        .map(|(k, &from)| {
            let to = starts.get(k + 1).copied().unwrap_or(lines.len());
            checkpoint::load(lines[from..to].join("\n").as_bytes()).map_err(|e| match e {
                Error::Parse { line, msg } => bad(from + line.max(1), msg),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (net, role) in nets.iter().zip(topology.roles()) {
        if net.spec.n_features != role.features().len() || net.spec.n_outputs != role.outputs().len() {
            return Err(Error::Shape {
                expected: format!("{} network with {} features", role.name(), role.features().len()),
                given: format!("{} features, {} outputs", net.spec.n_features, net.spec.n_outputs),
            });
        }
    }
    Composite::new(topology, nets, p_min, p_max)
}
