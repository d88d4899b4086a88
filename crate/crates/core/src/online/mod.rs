//! Daily schedule, execute, collect and retrain loop.

mod store;

pub use store::{DataStore, Split, Timeline, SPLIT_RATIOS};

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::composite::{
    build_ablation, closed_loop_nrmse, retrain_composite, rollout_closed, CompositeConfig, CompositeModel, EvalCase, HistoryBuffer, Replay,
    NetTrainReport, NrmseTriple, Topology,
};
use crate::datagen::{derive_rng, gen_day_inputs, gen_initial_dataset, GenConfig};
use crate::error::{Error, Result};
use crate::idealopt::{recover_setpoints, solve_ideal, BnbOptions};
use crate::metrics::{comfort_violation, cost_reduction_rate, energy_cost, occupied_band, Band};
use crate::netcore::TrainConfig;
use crate::plant::{simulate_day, PlantParams, PlantState};
use crate::profile::{DayInputs, DayProfile, Hourly, HOURS};
use crate::scheduler::{optimize, ScheduleParams, ScheduleProblem, ScheduleResult};

/// Set-point of the rule-based baseline, °C.
pub const RULE_SETPOINT: f64 = 23.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    /// N_d.
    pub n_days: usize,
    /// Δt_U in hours. Only daily updates are supported.
    pub update_period: usize,
    pub seed: u64,
    pub gen: GenConfig,
    pub plant: PlantParams,
    pub composite: CompositeConfig,
    /// Warm-start retraining budget.
    pub warm: TrainConfig,
    pub replay: Replay,
    pub schedule: ScheduleParams,
    /// N_S of the ideal problem.
    pub n_blocks: usize,
    /// Ideal problem cost of comfort violation, ¢ per °C and hour.
    pub comfort_penalty: f64,
    pub bnb: BnbOptions,
    /// Back-off from the comfort band while scheduling.
    pub margin: MarginPolicy,
    /// Back-off from the comfort band in the ideal problem, °C.
    pub ideal_margin: f64,
    /// Held-out days for the nRMSE curve.
    pub eval_days: usize,
    /// Also run the ideal and rule-based cases every day.
    pub run_cases: bool,
}

impl OnlineConfig {
    /// Desk-scale run: small networks, 20 days, a warm budget of a tenth of
    /// the bootstrap epochs.
    pub fn desk(seed: u64) -> Self {
        let mut composite = CompositeConfig::desk();
        composite.seed = seed;
        let warm = TrainConfig {
            epochs: composite.train.epochs / 10,
            ..composite.train
        };
        Self {
            n_days: 20,
            update_period: HOURS,
            seed,
            gen: GenConfig {
                seed,
                ..GenConfig::default()
            },
            plant: PlantParams::default(),
            composite,
            warm,
            schedule: ScheduleParams {
                seed,
                ..ScheduleParams::desk()
            },
            n_blocks: 4,
            comfort_penalty: 1000.0,
            bnb: BnbOptions::default(),
            margin: MarginPolicy {
                gain: 1.0,
                min: 0.1,
                max: 0.8,
            },
            replay: Replay { days: 5, copies: 4 },
            ideal_margin: 0.1,
            eval_days: 5,
            run_cases: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.update_period != HOURS {
            return Err(Error::InvalidParam {
                name: "update_period",
                reason: format!("only {HOURS} h is supported, got {}", self.update_period),
            });
        }
        if self.n_days == 0 {
            return Err(Error::InvalidParam {
                name: "n_days",
                reason: "need at least one day".into(),
            });
        }
        self.plant.validate()?;
        self.margin.validate()?;
        self.schedule.validate()
    }

    pub fn comfort_band(&self) -> Vec<Option<Band>> {
        let s = &self.schedule;
        occupied_band(s.t_min, s.t_max, s.t_start, s.t_end, HOURS)
    }
}

/// Comfort back-off for the learned model, sized from its indoor temperature
/// error: `clamp(gain * rmse, min, max)` in °C, where `rmse` pools the
/// occupied hours of closed-loop predictions on the held-out suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginPolicy {
    pub gain: f64,
    pub min: f64,
    pub max: f64,
}

impl MarginPolicy {
    pub fn fixed(m: f64) -> Self {
        Self {
            gain: 0.0,
            min: m,
            max: m,
        }
    }

    pub fn margin(&self, rmse: f64) -> f64 {
        if rmse.is_finite() {
            (self.gain * rmse).clamp(self.min, self.max)
        } else {
            self.max
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min >= 0.0 && self.min <= self.max && self.gain >= 0.0) {
            return Err(Error::InvalidParam {
                name: "margin",
                reason: format!("need 0 <= min <= max and gain >= 0, got {self:?}"),
            });
        }
        Ok(())
    }
}

/// Occupied-hour squared errors of closed-loop T_i predictions on `cases`.
fn occupied_sq_errors(model: &CompositeModel, cases: &[EvalCase], band: &[Option<Band>]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for c in cases {
        let hist = HistoryBuffer::from_day(&c.prelude, model.history_len())?;
        let pred = rollout_closed(model, &c.day.t_set, &c.day.env, &hist)?;
        out.extend((0..HOURS).filter(|&h| band[h].is_some()).map(|h| (pred.t_indoor[h] - c.day.t_indoor[h]).powi(2)));
    }
    Ok(out)
}

/// Back-off for `model`; the widest one when there is nothing to evaluate on.
pub fn model_margin(cfg: &OnlineConfig, model: &CompositeModel, eval: &[EvalCase]) -> Result<f64> {
    let sq = occupied_sq_errors(model, eval, &cfg.comfort_band())?;
    if sq.is_empty() {
        return Ok(cfg.margin.max);
    }
    Ok(cfg.margin.margin((sq.iter().sum::<f64>() / sq.len() as f64).sqrt()))
}

/// Outcome of one online day. Costs are plant-evaluated in dollars; the
/// ideal and rule-based cases start from the same plant state as the proposed
/// one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: usize,
    pub calendar_day: u32,
    /// Closed-loop nRMSE of the model that scheduled this day.
    pub nrmse: NrmseTriple,
    pub cost_proposed: f64,
    pub cost_ideal: f64,
    pub cost_rule: f64,
    pub r_cr: f64,
    pub v_tc: f64,
    pub v_tc_ideal: f64,
    pub v_tc_rule: f64,
    pub setpoints: Hourly,
    pub j: f64,
    /// Comfort back-off used while scheduling, °C.
    pub margin: f64,
    /// Occupied-hour RMS of predicted minus realized T_i, °C.
    pub t_pred_rmse: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub records: Vec<DayRecord>,
}

pub const CURVE_HEADER: [&str; 9] = [
    "day", "nrmse_l1", "nrmse_l2", "nrmse_l3", "cost_case1", "cost_case2", "cost_case3", "r_cr", "v_tc",
];

impl LearningCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CURVE_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.day.to_string(),
                r.nrmse.p.to_string(),
                r.nrmse.q.to_string(),
                r.nrmse.t_indoor.to_string(),
                r.cost_proposed.to_string(),
                r.cost_ideal.to_string(),
                r.cost_rule.to_string(),
                r.r_cr.to_string(),
                r.v_tc.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Means of `f` over four consecutive periods of (nearly) equal length.
    pub fn quartile_means(&self, f: impl Fn(&DayRecord) -> f64) -> [f64; 4] {
        let n = self.records.len();
        std::array::from_fn(|k| {
            let (a, b) = (k * n / 4, (k + 1) * n / 4);
            let xs = &self.records[a..b];
            xs.iter().map(&f).sum::<f64>() / xs.len().max(1) as f64
        })
    }

    /// Mean of `f` over the last `k` days.
    pub fn tail_mean(&self, k: usize, f: impl Fn(&DayRecord) -> f64) -> f64 {
        let xs = &self.records[self.records.len().saturating_sub(k)..];
        xs.iter().map(f).sum::<f64>() / xs.len().max(1) as f64
    }
}

fn eval_schedule(k: usize, seed: u64) -> Hourly {
    match k % 5 {
        0 => [RULE_SETPOINT; HOURS],
        1 => std::array::from_fn(|h| if h < 12 { 22.0 } else { 24.0 }),
        2 => std::array::from_fn(|h| match h {
            0..=6 => 24.0,
            7..=13 => 22.5,
            _ => 23.5,
        }),
        3 => std::array::from_fn(|h| match h {
            0..=3 | 20.. => 28.0,
            4..=9 => 21.0,
            _ => 24.0,
        }),
        _ => {
            let mut rng = derive_rng(seed, k as u64, 0xE7A1);
            let blocks: Vec<f64> = (0..8).map(|_| rng.gen_range(21.0..26.0)).collect();
            std::array::from_fn(|h| blocks[h / 3])
        }
    }
}

/// Held-out days with varied set-point schedules, far from the calendar days
/// the loop visits.
pub fn eval_suite(gen: &GenConfig, plant: &PlantParams, n: usize) -> Result<Vec<EvalCase>> {
    const FIRST: u32 = 100_000;
    (0..n)
        .map(|k| {
            let pre = gen_day_inputs(FIRST + 2 * k as u32, gen);
            let mut state = PlantState::uniform(24.0);
            for _ in 0..3 {
                state = simulate_day(&state, &pre, &[RULE_SETPOINT; HOURS], plant)?.1;
            }
            let (prelude, state) = simulate_day(&state, &pre, &[RULE_SETPOINT; HOURS], plant)?;
            let inputs = gen_day_inputs(FIRST + 2 * k as u32 + 1, gen);
            let (day, _) = simulate_day(&state, &inputs, &eval_schedule(k, gen.seed), plant)?;
            Ok(EvalCase { prelude, day })
        })
        .collect()
}

/// Trains every network of the topology on the store's training split.
pub fn bootstrap(store: &DataStore, cfg: &CompositeConfig) -> Result<(CompositeModel, Vec<NetTrainReport>)> {
    if store.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    build_ablation(store, cfg)
}

/// Schedules the next day with the model, executes it on the plant and
/// returns the plan, the recorded day and the plant state after it.
pub fn run_day(
    model: &CompositeModel,
    store: &DataStore,
    state: &PlantState,
    inputs: &DayInputs,
    params: &ScheduleParams,
    plant: &PlantParams,
) -> Result<(ScheduleResult, DayProfile, PlantState)> {
    let tl = store.timeline();
    let history = HistoryBuffer::from_timeline(tl, tl.len(), model.history_len())?;
    let problem = ScheduleProblem {
        price: inputs.price,
        env: inputs.env,
        params: params.clone(),
    };
    let plan = optimize(&problem, model, &history, &[RULE_SETPOINT; HOURS])?;
    let (profile, next) = simulate_day(state, inputs, &plan.setpoints, plant)?;
    Ok((plan, profile, next))
}

/// Reshuffles the splits with a seed derived from `day` and warm-starts
/// training from the current parameters.
pub fn retrain(
    model: &CompositeModel,
    store: &mut DataStore,
    warm: &TrainConfig,
    replay: &Replay,
    seed: u64,
    day: usize,
) -> Result<(CompositeModel, Vec<NetTrainReport>)> {
    store.reshuffle(derive_rng(seed, day as u64, 0x5E).gen());
    let warm = TrainConfig {
        seed: warm.seed ^ seed ^ (day as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ..*warm
    };
    retrain_composite(model, store, &warm, replay)
}

/// Ideal and rule-based realizations from `state`: (cost, v_TC) of each.
fn reference_cases(cfg: &OnlineConfig, state: &PlantState, inputs: &DayInputs) -> Result<[(f64, f64); 2]> {
    let band = cfg.comfort_band();
    let m = cfg.ideal_margin;
    let comfort: Vec<_> = band.iter().map(|b| b.map(|b| (b.lo + m, b.hi - m))).collect();
    let plan = solve_ideal(state, inputs, &cfg.plant, cfg.n_blocks, &comfort, Some(cfg.comfort_penalty), &cfg.bnb)?;
    let rec = recover_setpoints(&plan.power, state, inputs, &cfg.plant)?;
    let (ideal, _) = simulate_day(state, inputs, &rec.setpoints, &cfg.plant)?;
    let (rule, _) = simulate_day(state, inputs, &[RULE_SETPOINT; HOURS], &cfg.plant)?;
    Ok([
        (energy_cost(&inputs.price, &ideal.p), comfort_violation(&ideal.t_indoor, &band)),
        (energy_cost(&inputs.price, &rule.p), comfort_violation(&rule.t_indoor, &band)),
    ])
}

fn stage<T>(day: usize, stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Online {
        day,
        stage,
        source: Box::new(e),
    })
}

/// Everything the loop carries from day to day.
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub cfg: OnlineConfig,
    pub store: DataStore,
    pub model: CompositeModel,
    pub state: PlantState,
    pub eval: Vec<EvalCase>,
    pub curve: LearningCurve,
}

impl OnlineRun {
    /// Generates the initial dataset and bootstraps the composite model.
    pub fn start(cfg: OnlineConfig) -> Result<Self> {
        cfg.validate()?;
        let (store, state) = stage(0, "datagen", gen_initial_dataset(&cfg.gen, &cfg.plant))?;
        Self::start_from(cfg, store, state, None)
    }

    /// Continues from an existing store, bootstrapping unless a model is given.
    pub fn start_from(cfg: OnlineConfig, store: DataStore, state: PlantState, model: Option<CompositeModel>) -> Result<Self> {
        cfg.validate()?;
        let model = match model {
            Some(m) => m,
            None => stage(0, "bootstrap", bootstrap(&store, &cfg.composite))?.0,
        };
        let eval = stage(0, "eval", eval_suite(&cfg.gen, &cfg.plant, cfg.eval_days))?;
        Ok(Self {
            cfg,
            store,
            model,
            state,
            eval,
            curve: LearningCurve::default(),
        })
    }

    /// One pass of schedule, execute, collect and retrain.
    pub fn step(&mut self) -> Result<&DayRecord> {
        let d = self.curve.records.len() + 1;
        let cfg = &self.cfg;
        let calendar_day = self.store.last_day().day + 1;
        let inputs = gen_day_inputs(calendar_day, &cfg.gen);
        let nrmse = if self.eval.is_empty() {
            NrmseTriple {
                p: f64::NAN,
                q: f64::NAN,
                t_indoor: f64::NAN,
            }
        } else {
            stage(d, "evaluate", closed_loop_nrmse(&self.model, &self.eval))?
        };
        let band = cfg.comfort_band();
        let margin = stage(d, "evaluate", model_margin(cfg, &self.model, &self.eval))?;
        let params = ScheduleParams {
            seed: cfg.schedule.seed ^ u64::from(calendar_day),
            t_min: cfg.schedule.t_min + margin,
            t_max: cfg.schedule.t_max - margin,
            ..cfg.schedule.clone()
        };
        let (plan, profile, next) = stage(d, "schedule", run_day(&self.model, &self.store, &self.state, &inputs, &params, &cfg.plant))?;
        let sq: Vec<f64> = (0..HOURS)
            .filter(|&h| band[h].is_some())
            .map(|h| (plan.t_hat[h] - profile.t_indoor[h]).powi(2))
            .collect();
        let t_pred_rmse = (sq.iter().sum::<f64>() / sq.len().max(1) as f64).sqrt();
        let cost_proposed = energy_cost(&inputs.price, &profile.p);
        let v_tc = comfort_violation(&profile.t_indoor, &band);
        let [(cost_ideal, v_tc_ideal), (cost_rule, v_tc_rule)] = if cfg.run_cases {
            stage(d, "reference", reference_cases(cfg, &self.state, &inputs))?
        } else {
            [(f64::NAN, f64::NAN); 2]
        };
        let r_cr = cost_reduction_rate(cost_proposed, cost_rule).unwrap_or(f64::NAN);
        self.store.push(profile);
        self.state = next;
        let (model, reports) = stage(d, "retrain", retrain(&self.model, &mut self.store, &cfg.warm, &cfg.replay, cfg.seed, d))?;
        for r in &reports {
            log::debug!("day {d} {}: val {:.3e} -> {:.3e}", r.role.name(), r.initial_val, r.best_val);
        }
        self.model = model;
        log::info!(
            "day {d}: cost {cost_proposed:.2} / ideal {cost_ideal:.2} / rule {cost_rule:.2} $, r_CR {r_cr:.1}%, v_TC {v_tc:.3}, nRMSE T_i {:.3e}",
            nrmse.t_indoor
        );
        self.curve.records.push(DayRecord {
            day: d,
            calendar_day,
            nrmse,
            cost_proposed,
            cost_ideal,
            cost_rule,
            r_cr,
            v_tc,
            v_tc_ideal,
            v_tc_rule,
            setpoints: plan.setpoints,
            j: plan.j,
            margin,
            t_pred_rmse,
        });
        Ok(self.curve.records.last().expect("just pushed"))
    }
}

/// Runs the whole loop, calling `on_day` after every day.
pub fn online_loop_with(cfg: OnlineConfig, mut on_day: impl FnMut(&OnlineRun) -> Result<()>) -> Result<OnlineRun> {
    let n = cfg.n_days;
    let mut run = OnlineRun::start(cfg)?;
    for _ in 0..n {
        run.step()?;
        on_day(&run)?;
    }
    Ok(run)
}

pub fn online_loop(cfg: OnlineConfig) -> Result<OnlineRun> {
    online_loop_with(cfg, |_| Ok(()))
}

impl OnlineRun {
    /// Closed-loop nRMSE of the current model on the held-out suite.
    pub fn current_nrmse(&self) -> Result<NrmseTriple> {
        closed_loop_nrmse(&self.model, &self.eval)
    }
}

/// One row of an ablation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub topology: Topology,
    /// `false` for the bootstrapped model before any online day.
    pub online: bool,
    pub nrmse: NrmseTriple,
    /// Mean plant cost per day over the run, $. NaN for offline rows.
    pub mean_cost: f64,
    pub mean_v_tc: f64,
}

/// Runs the loop once per topology with otherwise identical settings. The
/// last row is the one-network model as bootstrapped, before online learning.
pub fn ablation_study(cfg: &OnlineConfig) -> Result<(Vec<AblationRow>, Vec<OnlineRun>)> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut offline = None;
    for topology in [Topology::ThreeNets, Topology::TwoNets, Topology::OneNet] {
        let mut c = cfg.clone();
        c.composite.topology = topology;
        let run = online_loop(c)?;
        let n = run.curve.records.len() as f64;
        rows.push(AblationRow {
            topology,
            online: true,
            nrmse: run.current_nrmse()?,
            mean_cost: run.curve.records.iter().map(|r| r.cost_proposed).sum::<f64>() / n,
            mean_v_tc: run.curve.records.iter().map(|r| r.v_tc).sum::<f64>() / n,
        });
        if topology == Topology::OneNet {
            offline = run.curve.records.first().map(|r| AblationRow {
                topology,
                online: false,
                nrmse: r.nrmse,
                mean_cost: f64::NAN,
                mean_v_tc: f64::NAN,
            });
        }
        runs.push(run);
    }
    rows.extend(offline);
    Ok((rows, runs))
}

#[cfg(test)]
mod tests;
