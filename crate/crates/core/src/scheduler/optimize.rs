use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{evaluate, Breakdown, ScheduleProblem};
use crate::composite::{Composite, HistoryBuffer, Predictions, Predictor};
use crate::error::{Error, Result};
use crate::netcore::Optimizer;
use crate::profile::{Hourly, HOURS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    /// u*, °C, within the set-point bounds.
    pub setpoints: Hourly,
    pub p_hat: Hourly,
    pub q_hat: Option<Hourly>,
    pub t_hat: Hourly,
    /// J at the start of every epoch of the winning run.
    pub j_history: Vec<f64>,
    pub j: f64,
    pub j_init: f64,
    /// Σ C^t·P̂^t / 100, dollars.
    pub cost_pred: f64,
    pub breakdown: Breakdown,
    /// Which start produced u* (0 = the given initial schedule).
    pub restart: usize,
    /// Epoch at which a rollout diverged and the descent stopped early.
    pub stopped_at: Option<usize>,
}

struct Run {
    u: Hourly,
    j_history: Vec<f64>,
    stopped_at: Option<usize>,
}

fn descend<N: Predictor>(
    u0: Hourly,
    problem: &ScheduleProblem,
    model: &Composite<N>,
    history: &HistoryBuffer,
) -> Result<Run> {
    let prm = &problem.params;
    let mut u = u0;
    let mut best = (f64::INFINITY, u0);
    let mut m1 = [0.0; HOURS];
    let mut m2 = [0.0; HOURS];
    let mut j_history = Vec::with_capacity(prm.epochs);
    let mut stopped_at = None;
    for epoch in 0..=prm.epochs {
        let (j, _, g, _) = match evaluate(&u, problem, model, history) {
            Ok(v) => v,
            Err(Error::RolloutDiverged { hour, value }) if epoch > 0 => {
                log::warn!("rollout diverged at epoch {epoch} (hour {hour}, {value:.2} °C); keeping best iterate");
                stopped_at = Some(epoch);
                break;
            }
            Err(e) => return Err(e),
        };
        if !j.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::ObjectiveDiverged { epoch });
        }
        if j < best.0 {
            best = (j, u);
        }
        if epoch == prm.epochs {
            break;
        }
        j_history.push(j);
        let lr = prm.lr_at(epoch);
        match prm.step_rule {
            Optimizer::Gd => {
                for h in 0..HOURS {
                    u[h] -= lr * g[h];
                }
            }
            Optimizer::Adam => {
                let t = (epoch + 1) as i32;
                let (b1, b2) = (0.9f64, 0.999f64);
                for h in 0..HOURS {
                    m1[h] = b1 * m1[h] + (1.0 - b1) * g[h];
                    m2[h] = b2 * m2[h] + (1.0 - b2) * g[h] * g[h];
                    let mh = m1[h] / (1.0 - b1.powi(t));
                    let vh = m2[h] / (1.0 - b2.powi(t));
                    u[h] -= lr * mh / (vh.sqrt() + 1e-8);
                }
            }
        }
    }
    Ok(Run {
        u: best.1,
        j_history,
        stopped_at,
    })
}

/// Descends on J from `u_init` (plus `restarts` seeded perturbations of it),
/// keeps the best iterate, and projects it onto the set-point bounds. The
/// returned J never exceeds J(u_init) when `u_init` is within bounds.
pub fn optimize<N: Predictor>(
    problem: &ScheduleProblem,
    model: &Composite<N>,
    history: &HistoryBuffer,
    u_init: &Hourly,
) -> Result<ScheduleResult> {
    let prm = &problem.params;
    prm.validate()?;
    if u_init.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial schedule"));
    }
    let finish = |u: &Hourly| -> Result<(f64, Breakdown, Predictions)> {
        let (j, b, _, pred) = evaluate(u, problem, model, history)?;
        Ok((j, b, pred))
    };
    let init_feasible = prm.project(u_init) == *u_init;
    let (j_init, _, _) = finish(u_init)?;

    let mut starts = vec![*u_init];
    let mut rng = ChaCha8Rng::seed_from_u64(prm.seed);
    let noise = Normal::new(0.0, prm.restart_sd.max(1e-12)).expect("positive sd");
    for _ in 0..prm.restarts {
        let u: Hourly = std::array::from_fn(|h| u_init[h] + noise.sample(&mut rng));
        starts.push(prm.project(&u));
    }

    let mut best: Option<(f64, Breakdown, Predictions, Hourly, usize, Run)> = None;
    for (i, u0) in starts.into_iter().enumerate() {
        let run = descend(u0, problem, model, history)?;
        let u = prm.project(&run.u);
        let (j, b, pred) = finish(&u)?;
        if best.as_ref().map_or(true, |bst| j < bst.0) {
            best = Some((j, b, pred, u, i, run));
        }
    }
    let (mut j, mut b, mut pred, mut u, restart, run) = best.expect("at least one start");
    if init_feasible && j > j_init {
        let (j0, b0, p0) = finish(u_init)?;
        j = j0;
        b = b0;
        pred = p0;
        u = *u_init;
    }
    let cost_pred = (0..HOURS).map(|h| problem.price[h] * pred.p[h] / 100.0).sum();
    Ok(ScheduleResult {
        setpoints: u,
        p_hat: pred.p,
        q_hat: pred.q,
        t_hat: pred.t_indoor,
        j_history: run.j_history,
        j,
        j_init,
        cost_pred,
        breakdown: b,
        restart,
        stopped_at: run.stopped_at,
    })
}

/// Hourly schedule table: `hour,t_set,p_hat,q_hat,t_hat`.
pub fn write_schedule_csv<W: Write>(out: W, r: &ScheduleResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "t_set", "p_hat", "q_hat", "t_hat"])?;
    for h in 0..HOURS {
        let q = r.q_hat.map_or(String::new(), |q| q[h].to_string());
        w.write_record([
            h.to_string(),
            r.setpoints[h].to_string(),
            r.p_hat[h].to_string(),
            q,
            r.t_hat[h].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
