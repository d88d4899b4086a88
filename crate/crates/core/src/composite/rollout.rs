use super::{window_at, Composite, HistoryBuffer, Predictor, Role, Signal, Track};
use crate::error::{Error, Result};
use crate::profile::{DayProfile, Environment, Hourly, HOURS};

/// Range outside which a predicted indoor temperature aborts a rollout, °C.
pub const T_INDOOR_GUARD: (f64, f64) = (0.0, 50.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub p: Hourly,
    /// Absent for topologies without a heat-pump network.
    pub q: Option<Hourly>,
    pub t_indoor: Hourly,
}

/// Forward record of a closed rollout for reverse-mode sweeps.
pub struct RolloutTape<T> {
    track: Track,
    /// Per hour, one tape per network.
    tapes: Vec<Vec<T>>,
    /// Whether the power clamp was active per hour.
    clamped: Vec<bool>,
    pub predictions: Predictions,
}

fn check_inputs(setpoints: &Hourly, history: &HistoryBuffer, needed: usize) -> Result<()> {
    if history.len() < needed {
        return Err(Error::MissingHistory {
            needed,
            available: history.len(),
        });
    }
    if setpoints.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("set-point"));
    }
    Ok(())
}

fn guard(hour: usize, t: f64) -> Result<()> {
    if !(T_INDOOR_GUARD.0..=T_INDOOR_GUARD.1).contains(&t) || !t.is_finite() {
        return Err(Error::RolloutDiverged { hour, value: t });
    }
    Ok(())
}

/// Closed-loop rollout keeping the tapes needed by [`RolloutTape::vjp`].
///
/// Each hour runs the networks in thermostat, heat pump, envelope order.
/// Predicted P (clamped to the power limits), Q and T_i are written back into
/// the track, so later windows see them as lags.
pub fn rollout_tape<N: Predictor>(
    model: &Composite<N>,
    setpoints: &Hourly,
    env: &[Environment; HOURS],
    history: &HistoryBuffer,
) -> Result<RolloutTape<N::Tape>> {
    check_inputs(setpoints, history, model.history_len())?;
    let mut track = Track::new(history, env);
    let off = track.offset;
    for (h, &u) in setpoints.iter().enumerate() {
        track.set(Signal::TSet, off + h, u);
    }
    let roles = model.topology.roles();
    let mut tapes = Vec::with_capacity(HOURS);
    let mut clamped = vec![false; HOURS];
    let mut p = [0.0; HOURS];
    let mut q = [0.0; HOURS];
    let mut t = [0.0; HOURS];
    for h in 0..HOURS {
        let k = off + h;
        let mut hour_tapes = Vec::with_capacity(roles.len());
        for (role, net) in roles.iter().zip(&model.nets) {
            let w = window_at(*role, net.seq_len(), k, |s, i| track.get(s, i));
            let (y, tape) = net.run(&w)?;
            for (sig, &v) in role.outputs().iter().zip(&y) {
                let v = match sig {
                    Signal::Power => {
                        let c = v.clamp(model.p_min, model.p_max);
                        clamped[h] = c != v;
                        p[h] = c;
                        c
                    }
                    Signal::Cooling => {
                        q[h] = v;
                        v
                    }
                    Signal::TIndoor => {
                        guard(h, v)?;
                        t[h] = v;
                        v
                    }
                    _ => unreachable!("networks only predict P, Q and T_i"),
                };
                track.set(*sig, k, v);
            }
            hour_tapes.push(tape);
        }
        tapes.push(hour_tapes);
    }
    let has_q = roles.contains(&Role::HeatPump);
    Ok(RolloutTape {
        track,
        tapes,
        clamped,
        predictions: Predictions {
            p,
            q: has_q.then_some(q),
            t_indoor: t,
        },
    })
}

pub fn rollout_closed<N: Predictor>(
    model: &Composite<N>,
    setpoints: &Hourly,
    env: &[Environment; HOURS],
    history: &HistoryBuffer,
) -> Result<Predictions> {
    Ok(rollout_tape(model, setpoints, env, history)?.predictions)
}

impl<T> RolloutTape<T> {
    /// Set-point gradient of Σ_t (dp_t·P̂^t + dq_t·Q̂^t + dt_t·T̂_i^t).
    ///
    /// Hours are swept in reverse and, within an hour, networks in reverse
    /// wiring order, so every output adjoint is complete before its producer is
    /// visited.
    pub fn vjp<N: Predictor<Tape = T>>(
        &self,
        model: &Composite<N>,
        dp: &Hourly,
        dq: &Hourly,
        dt: &Hourly,
    ) -> Hourly {
        let off = self.track.offset;
        let n = off + HOURS;
        let mut adj_p = vec![0.0; n];
        let mut adj_q = vec![0.0; n];
        let mut adj_t = vec![0.0; n];
        let mut du = [0.0; HOURS];
        for h in 0..HOURS {
            adj_p[off + h] = dp[h];
            adj_q[off + h] = dq[h];
            adj_t[off + h] = dt[h];
        }
        let roles = model.topology.roles();
        for h in (0..HOURS).rev() {
            let k = off + h;
            for (ri, (role, net)) in roles.iter().zip(&model.nets).enumerate().rev() {
                let upstream: Vec<f64> = role
                    .outputs()
                    .iter()
                    .map(|sig| match sig {
                        Signal::Power if self.clamped[h] => 0.0,
                        Signal::Power => adj_p[k],
                        Signal::Cooling => adj_q[k],
                        Signal::TIndoor => adj_t[k],
                        _ => 0.0,
                    })
                    .collect();
                if upstream.iter().all(|&u| u == 0.0) {
                    continue;
                }
                let g = net.input_grad(&self.tapes[h][ri], &upstream);
                let feats = role.features();
                let lp = net.seq_len();
                for (step, s) in (k + 1 - lp..=k).enumerate() {
                    for (j, ft) in feats.iter().enumerate() {
                        let idx = s - ft.lag;
                        if idx < off {
                            continue;
                        }
                        let v = g[step * feats.len() + j];
                        match ft.signal {
                            Signal::TSet => du[idx - off] += v,
                            Signal::Power => adj_p[idx] += v,
                            Signal::Cooling => adj_q[idx] += v,
                            Signal::TIndoor => adj_t[idx] += v,
                            _ => {}
                        }
                    }
                }
            }
        }
        du
    }
}

/// Set-point Jacobians of a closed rollout: `p[t][tau]` = ∂P̂^t/∂T_set^tau and
/// `t_indoor[t][tau]` = ∂T̂_i^t/∂T_set^tau.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobians {
    pub p: [[f64; HOURS]; HOURS],
    pub t_indoor: [[f64; HOURS]; HOURS],
}

pub fn rollout_grad<N: Predictor>(
    model: &Composite<N>,
    setpoints: &Hourly,
    env: &[Environment; HOURS],
    history: &HistoryBuffer,
) -> Result<(Predictions, Jacobians)> {
    let tape = rollout_tape(model, setpoints, env, history)?;
    let zero = [0.0; HOURS];
    let mut jac = Jacobians {
        p: [[0.0; HOURS]; HOURS],
        t_indoor: [[0.0; HOURS]; HOURS],
    };
    for t in 0..HOURS {
        let mut e = [0.0; HOURS];
        e[t] = 1.0;
        jac.p[t] = tape.vjp(model, &e, &zero, &zero);
        jac.t_indoor[t] = tape.vjp(model, &zero, &zero, &e);
    }
    Ok((tape.predictions, jac))
}

/// Open-loop predictions for a recorded day: every window is filled with
/// actual signals, so errors do not compound.
pub fn rollout_open<N: Predictor>(model: &Composite<N>, day: &DayProfile, history: &HistoryBuffer) -> Result<Predictions> {
    check_inputs(&day.t_set, history, model.history_len())?;
    let mut track = Track::new(history, &day.env);
    let off = track.offset;
    for h in 0..HOURS {
        track.set(Signal::TSet, off + h, day.t_set[h]);
        track.set(Signal::Power, off + h, day.p[h]);
        track.set(Signal::Cooling, off + h, day.q[h]);
        track.set(Signal::TIndoor, off + h, day.t_indoor[h]);
    }
    let roles = model.topology.roles();
    let mut p = [0.0; HOURS];
    let mut q = [0.0; HOURS];
    let mut t = [0.0; HOURS];
    for h in 0..HOURS {
        let k = off + h;
        for (role, net) in roles.iter().zip(&model.nets) {
            let w = window_at(*role, net.seq_len(), k, |s, i| track.get(s, i));
            let (y, _) = net.run(&w)?;
            for (sig, &v) in role.outputs().iter().zip(&y) {
                match sig {
                    Signal::Power => p[h] = v.clamp(model.p_min, model.p_max),
                    Signal::Cooling => q[h] = v,
                    Signal::TIndoor => t[h] = v,
                    _ => {}
                }
            }
        }
    }
    Ok(Predictions {
        p,
        q: roles.contains(&Role::HeatPump).then_some(q),
        t_indoor: t,
    })
}
