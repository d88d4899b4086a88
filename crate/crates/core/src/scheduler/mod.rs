//! Day-ahead set-point search: penalized objective over a closed rollout of the
//! composite model, its exact gradient, and a first-order descent loop.

mod optimize;
mod penalty;

pub use optimize::{optimize, write_schedule_csv, ScheduleResult};
pub use penalty::{hinge, input_penalty, state_penalty, StatePenalty};

use serde::{Deserialize, Serialize};

use crate::composite::{rollout_closed, rollout_tape, Composite, HistoryBuffer, Predictions, Predictor};
use crate::error::{Error, Result};
use crate::netcore::Optimizer;
use crate::profile::{Environment, Hourly, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveForm {
    /// λ_y·y².
    Quadratic,
    /// λ_y·y·|y|, which rewards consumption at negative prices.
    Signed,
}

impl std::str::FromStr for ObjectiveForm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quadratic" => Ok(Self::Quadratic),
            "signed" => Ok(Self::Signed),
            other => Err(format!("unknown objective `{other}` (quadratic | signed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub lambda_y: f64,
    pub lambda_k: f64,
    pub lambda_h: f64,
    /// Set-point bounds u_min, u_max, °C.
    pub u_min: f64,
    pub u_max: f64,
    /// Comfort band during occupied hours, °C.
    pub t_min: f64,
    pub t_max: f64,
    /// Occupied hours t_start..=t_end.
    pub t_start: usize,
    pub t_end: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Ramp limits R_L < 0 < R_H, kW per hour.
    pub r_down: f64,
    pub r_up: f64,
    /// N_EO.
    pub epochs: usize,
    /// R_O and its step drop.
    pub lr: f64,
    pub lr_drop_fraction: f64,
    pub lr_drop_factor: f64,
    pub step_rule: Optimizer,
    pub form: ObjectiveForm,
    /// Extra seeded restarts around the initial schedule.
    pub restarts: usize,
    pub restart_sd: f64,
    pub seed: u64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            lambda_y: 2.0,
            lambda_k: 0.5,
            lambda_h: 7.5,
            u_min: 15.0,
            u_max: 35.0,
            t_min: 22.0,
            t_max: 24.0,
            t_start: 7,
            t_end: 19,
            p_min: 0.0,
            p_max: 50.0,
            r_down: -40.0,
            r_up: 30.0,
            epochs: 1000,
            lr: 1e-3,
            lr_drop_fraction: 2.0 / 3.0,
            lr_drop_factor: 10.0,
            step_rule: Optimizer::Gd,
            form: ObjectiveForm::Quadratic,
            restarts: 0,
            restart_sd: 1.5,
            seed: 0,
        }
    }
}

impl ScheduleParams {
    /// Desk-scale search: Adam steps in °C with a short budget.
    pub fn desk() -> Self {
        Self {
            epochs: 200,
            lr: 0.1,
            step_rule: Optimizer::Adam,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_y", self.lambda_y), ("lambda_k", self.lambda_k), ("lambda_h", self.lambda_h)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if !(self.u_min < self.u_max && self.t_min < self.t_max && self.p_min < self.p_max) {
            return Err(Error::InvalidParam {
                name: "bounds",
                reason: "lower bounds must be below upper bounds".into(),
            });
        }
        if !(self.r_down < 0.0 && self.r_up > 0.0) {
            return Err(Error::InvalidParam {
                name: "r_up",
                reason: "need r_down < 0 < r_up".into(),
            });
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let drop_at = (self.lr_drop_fraction * self.epochs as f64).floor() as usize;
        if epoch >= drop_at {
            self.lr / self.lr_drop_factor
        } else {
            self.lr
        }
    }

    /// Indoor temperature band of hour `h`: the comfort band when occupied,
    /// the set-point range otherwise.
    pub fn band(&self, h: usize) -> (f64, f64) {
        if (self.t_start..=self.t_end).contains(&h) {
            (self.t_min, self.t_max)
        } else {
            (self.u_min, self.u_max)
        }
    }

    pub fn project(&self, u: &Hourly) -> Hourly {
        u.map(|v| v.clamp(self.u_min, self.u_max))
    }
}

/// One day's scheduling instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleProblem {
    /// C^t, ¢/kWh.
    pub price: Hourly,
    pub env: [Environment; HOURS],
    pub params: ScheduleParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Breakdown {
    /// Σ λ_y·φ(y).
    pub cost: f64,
    /// Σ λ_k·k².
    pub input: f64,
    /// λ_h·Σ h² per state component.
    pub comfort: f64,
    pub cooling: f64,
    pub power: f64,
    pub ramp: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.cost + self.input + self.comfort + self.cooling + self.power + self.ramp
    }
}

/// y^t in dollars.
fn hourly_cost(price: f64, p: f64) -> f64 {
    price * p / 100.0
}

/// J and its breakdown for given predictions. Also returns the adjoints
/// (∂J/∂P̂, ∂J/∂Q̂, ∂J/∂T̂_i, explicit ∂J/∂u).
pub fn objective_from_predictions(
    u: &Hourly,
    pred: &Predictions,
    problem: &ScheduleProblem,
) -> (f64, Breakdown, [Hourly; 4]) {
    let prm = &problem.params;
    let mut b = Breakdown::default();
    let mut dp = [0.0; HOURS];
    let mut dq = [0.0; HOURS];
    let mut dt = [0.0; HOURS];
    let mut du = [0.0; HOURS];
    for h in 0..HOURS {
        let y = hourly_cost(problem.price[h], pred.p[h]);
        let (phi, dphi) = match prm.form {
            ObjectiveForm::Quadratic => (y * y, 2.0 * y),
            ObjectiveForm::Signed => (y * y.abs(), 2.0 * y.abs()),
        };
        b.cost += prm.lambda_y * phi;
        dp[h] += prm.lambda_y * dphi * problem.price[h] / 100.0;
    }
    let k = input_penalty(u, prm.u_min, prm.u_max);
    for h in 0..HOURS {
        b.input += prm.lambda_k * k[h].0 * k[h].0;
        du[h] += 2.0 * prm.lambda_k * k[h].0 * k[h].1;
    }
    let sp = state_penalty(pred, prm);
    let lh = prm.lambda_h;
    for h in 0..HOURS {
        let s = &sp[h];
        b.comfort += lh * s.t_indoor.0 * s.t_indoor.0;
        dt[h] += 2.0 * lh * s.t_indoor.0 * s.t_indoor.1;
        b.cooling += lh * s.cooling.0 * s.cooling.0;
        dq[h] += 2.0 * lh * s.cooling.0 * s.cooling.1;
        b.power += lh * s.power.0 * s.power.0;
        dp[h] += 2.0 * lh * s.power.0 * s.power.1;
        b.ramp += lh * s.ramp.0 * s.ramp.0;
        let g = 2.0 * lh * s.ramp.0 * s.ramp.1;
        dp[h] += g;
        if h > 0 {
            dp[h - 1] -= g;
        }
    }
    (b.total(), b, [dp, dq, dt, du])
}

/// J(u) = Σ_t λ_y·φ(y^t) + λ_k·(k^t)² + λ_h·|h^t|² over a closed rollout.
pub fn objective<N: Predictor>(
    u: &Hourly,
    problem: &ScheduleProblem,
    model: &Composite<N>,
    history: &HistoryBuffer,
) -> Result<(f64, Breakdown)> {
    let pred = rollout_closed(model, u, &problem.env, history)?;
    let (j, b, _) = objective_from_predictions(u, &pred, problem);
    Ok((j, b))
}

/// Exact dJ/du through the rollout.
pub fn gradient<N: Predictor>(
    u: &Hourly,
    problem: &ScheduleProblem,
    model: &Composite<N>,
    history: &HistoryBuffer,
) -> Result<Hourly> {
    Ok(evaluate(u, problem, model, history)?.2)
}

/// J, breakdown, gradient and predictions in one rollout.
pub fn evaluate<N: Predictor>(
    u: &Hourly,
    problem: &ScheduleProblem,
    model: &Composite<N>,
    history: &HistoryBuffer,
) -> Result<(f64, Breakdown, Hourly, Predictions)> {
    let tape = rollout_tape(model, u, &problem.env, history)?;
    let (j, b, [dp, dq, dt, du]) = objective_from_predictions(u, &tape.predictions, problem);
    let mut g = tape.vjp(model, &dp, &dq, &dt);
    for h in 0..HOURS {
        g[h] += du[h];
    }
    Ok((j, b, g, tape.predictions))
}
