use serde::{Deserialize, Serialize};

use super::bnb::{solve_bnb, BnbOptions, MipSolution, MipStatus};
use super::lp::{Problem, Sense};
use crate::error::{Error, Result};
use crate::plant::{pi_step, pulse_response, simulate_power, PlantParams, PlantState};
use crate::profile::{DayInputs, Environment, Hourly, HOURS};
use crate::plant::heat_pump_output;

/// Largest tolerated gap between the linearized and simulated T_i, °C.
pub const RECONSTRUCTION_TOL: f64 = 0.05;

/// Piecewise-linear indoor temperature response to power blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlModel {
    /// `f[t][tau][n]`, °C/kW.
    pub f: Vec<Vec<Vec<f64>>>,
    /// Indoor temperature with the HVAC off, °C.
    pub t_free: Vec<f64>,
    /// δ_n,max, kW.
    pub block_caps: Vec<f64>,
    pub n_blocks: usize,
}

impl PwlModel {
    pub fn horizon(&self) -> usize {
        self.t_free.len()
    }

    /// Linearized T_i for block powers `delta[t][n]`.
    pub fn predict(&self, delta: &[Vec<f64>]) -> Vec<f64> {
        (0..self.horizon())
            .map(|t| {
                let mut v = self.t_free[t];
                for tau in 0..=t {
                    for n in 0..self.n_blocks {
                        v += self.f[t][tau][n] * delta[tau][n];
                    }
                }
                v
            })
            .collect()
    }

    /// Fills blocks in order for an hourly power profile.
    pub fn fill(&self, power: &[f64]) -> Vec<Vec<f64>> {
        power
            .iter()
            .map(|&p| {
                let mut rest = p;
                self.block_caps
                    .iter()
                    .map(|&c| {
                        let d = rest.clamp(0.0, c);
                        rest -= d;
                        d
                    })
                    .collect()
            })
            .collect()
    }
}

/// Identifies the piecewise-linear model around `init` for one day and checks
/// it against a direct simulation of a probe schedule sitting on block edges.
pub fn build_pwl(
    init: &PlantState,
    env: &[Environment; HOURS],
    n_blocks: usize,
    plant: &PlantParams,
) -> Result<PwlModel> {
    if n_blocks == 0 {
        return Err(Error::InvalidParam {
            name: "n_blocks",
            reason: "need at least one block".into(),
        });
    }
    let r = pulse_response(init, env, n_blocks, plant)?;
    let model = PwlModel {
        f: r.f,
        t_free: r.t_free.to_vec(),
        block_caps: vec![r.block_width; n_blocks],
        n_blocks,
    };
    // the chord model is exact at block edges, so the probe visits edges in
    // every hour and any deviation is a failure of superposition over time
    let w = r.block_width;
    let probe: Hourly = std::array::from_fn(|h| w * ((h * 3 + h / 5) % (n_blocks + 1)) as f64);
    let sim = simulate_power(init, env, &probe, plant)?;
    let lin = model.predict(&model.fill(&probe));
    let max_dev = (0..HOURS).map(|h| (lin[h] - sim.t_indoor[h]).abs()).fold(0.0, f64::max);
    if max_dev > RECONSTRUCTION_TOL {
        return Err(Error::Reconstruction {
            max_dev,
            tol: RECONSTRUCTION_TOL,
        });
    }
    Ok(model)
}

/// Data of the ideal MILP over `price.len()` hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealSpec {
    pub price: Vec<f64>,
    pub model: PwlModel,
    /// Comfort band per hour, `None` when unconstrained.
    pub comfort: Vec<Option<(f64, f64)>>,
    pub r_down: f64,
    pub r_up: f64,
    /// Cost per °C of comfort violation; `None` makes the band hard.
    pub comfort_penalty: Option<f64>,
}

/// Variable layout of an instance built by [`build_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub horizon: usize,
    pub n_blocks: usize,
    /// δ[t][n] at `delta + t·n_blocks + n`.
    pub delta: usize,
    /// a[t][n] for n = 1..n_blocks-1 at `fill + t·(n_blocks-1) + n - 1`.
    pub fill: usize,
}

impl Layout {
    pub fn d(&self, t: usize, n: usize) -> usize {
        self.delta + t * self.n_blocks + n
    }

    /// Binary a_n of hour t, 1 <= n < n_blocks.
    pub fn a(&self, t: usize, n: usize) -> usize {
        self.fill + t * (self.n_blocks - 1) + n - 1
    }

    pub fn power(&self, x: &[f64]) -> Vec<f64> {
        (0..self.horizon)
            .map(|t| (0..self.n_blocks).map(|n| x[self.d(t, n)]).sum())
            .collect()
    }
}

/// min Σ_t C^t Σ_n δ_n^t subject to block fill order, ramp limits (with the
/// power before the first hour at zero) and the linearized comfort band.
pub fn build_instance(spec: &IdealSpec) -> (Problem, Layout) {
    let nt = spec.price.len();
    let ns = spec.model.n_blocks;
    let caps = &spec.model.block_caps;
    let mut p = Problem::new();
    for t in 0..nt {
        for n in 0..ns {
            p.add_var(format!("d_{t}_{n}"), spec.price[t], 0.0, caps[n], false);
        }
    }
    let fill = p.n_vars();
    for t in 0..nt {
        for n in 1..ns {
            p.add_var(format!("a_{t}_{n}"), 0.0, 0.0, 1.0, true);
        }
    }
    let lay = Layout {
        horizon: nt,
        n_blocks: ns,
        delta: 0,
        fill,
    };
    for t in 0..nt {
        // block n (0-based) is full when a_{n+1} = 1; block n+1 may only run then
        for n in 1..ns {
            p.add_row(
                format!("full_{t}_{n}"),
                vec![(lay.d(t, n - 1), 1.0), (lay.a(t, n), -caps[n - 1])],
                Sense::Ge,
                0.0,
            );
            p.add_row(
                format!("order_{t}_{n}"),
                vec![(lay.d(t, n), 1.0), (lay.a(t, n), -caps[n])],
                Sense::Le,
                0.0,
            );
        }
    }
    for t in 0..nt {
        let mut coeffs: Vec<(usize, f64)> = (0..ns).map(|n| (lay.d(t, n), 1.0)).collect();
        if t > 0 {
            coeffs.extend((0..ns).map(|n| (lay.d(t - 1, n), -1.0)));
        }
        p.add_row(format!("ramp_up_{t}"), coeffs.clone(), Sense::Le, spec.r_up);
        p.add_row(format!("ramp_down_{t}"), coeffs, Sense::Ge, spec.r_down);
    }
    for t in 0..nt {
        let Some((lo, hi)) = spec.comfort[t] else { continue };
        let mut coeffs = Vec::new();
        for tau in 0..=t {
            for n in 0..ns {
                let f = spec.model.f[t][tau][n];
                if f != 0.0 {
                    coeffs.push((lay.d(tau, n), f));
                }
            }
        }
        let free = spec.model.t_free[t];
        match spec.comfort_penalty {
            None => {
                p.add_row(format!("comfort_hi_{t}"), coeffs.clone(), Sense::Le, hi - free);
                p.add_row(format!("comfort_lo_{t}"), coeffs, Sense::Ge, lo - free);
            }
            Some(w) => {
                let up = p.add_var(format!("s_hi_{t}"), w, 0.0, f64::INFINITY, false);
                let dn = p.add_var(format!("s_lo_{t}"), w, 0.0, f64::INFINITY, false);
                let mut c_hi = coeffs.clone();
                c_hi.push((up, -1.0));
                p.add_row(format!("comfort_hi_{t}"), c_hi, Sense::Le, hi - free);
                let mut c_lo = coeffs;
                c_lo.push((dn, 1.0));
                p.add_row(format!("comfort_lo_{t}"), c_lo, Sense::Ge, lo - free);
            }
        }
    }
    (p, lay)
}

/// Sets the fill binaries from an LP point when its blocks are already filled
/// in order.
pub fn fill_heuristic<'a>(p: &'a Problem, lay: &'a Layout, caps: &'a [f64]) -> impl Fn(&[f64]) -> Option<Vec<f64>> + 'a {
    move |x: &[f64]| {
        let mut y = x.to_vec();
        for t in 0..lay.horizon {
            for n in 1..lay.n_blocks {
                let full = y[lay.d(t, n - 1)] >= caps[n - 1] - 1e-7;
                y[lay.a(t, n)] = if full { 1.0 } else { 0.0 };
                if full {
                    y[lay.d(t, n - 1)] = caps[n - 1];
                }
            }
        }
        p.is_feasible(&y, 1e-7).then_some(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdealPlan {
    pub power: Hourly,
    pub mip: MipSolution,
    /// Linearized indoor temperature under `power`.
    pub t_linear: Vec<f64>,
}

/// Solves the ideal problem for one day starting from `init`.
pub fn solve_ideal(
    init: &PlantState,
    inputs: &DayInputs,
    plant: &PlantParams,
    n_blocks: usize,
    comfort: &[Option<(f64, f64)>],
    comfort_penalty: Option<f64>,
    opts: &BnbOptions,
) -> Result<IdealPlan> {
    let model = build_pwl(init, &inputs.env, n_blocks, plant)?;
    let spec = IdealSpec {
        price: inputs.price.to_vec(),
        model,
        comfort: comfort.to_vec(),
        r_down: plant.thermostat.r_down,
        r_up: plant.thermostat.r_up,
        comfort_penalty,
    };
    let (p, lay) = build_instance(&spec);
    let h = fill_heuristic(&p, &lay, &spec.model.block_caps);
    let mip = solve_bnb(&p, opts, Some(&h))?;
    if mip.status == MipStatus::Infeasible {
        return Err(Error::Infeasible);
    }
    let pw = lay.power(&mip.x);
    let power: Hourly = std::array::from_fn(|t| pw[t].clamp(plant.heat_pump.p_min, plant.heat_pump.p_max));
    let delta: Vec<Vec<f64>> = (0..HOURS)
        .map(|t| (0..n_blocks).map(|n| mip.x[lay.d(t, n)]).collect())
        .collect();
    log::debug!(
        "ideal MILP: root bound {:.4}, objective {:.4}, {} nodes, {} branched",
        mip.root_bound,
        mip.objective,
        mip.nodes,
        mip.branched
    );
    Ok(IdealPlan {
        power,
        t_linear: spec.model.predict(&delta),
        mip,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub setpoints: Hourly,
    /// Realized power of the closed loop, kW.
    pub power: Hourly,
    /// |realized - requested| per hour, kW.
    pub residual: Hourly,
}

/// Inverts the thermostat hour by hour: for each hour the set-point in
/// [15, 35] °C whose PI output is closest to the target is found by a grid
/// scan refined with bisection, and the plant is advanced with the resulting
/// power.
///
/// The dead-band can keep the HVAC off for small requests, or start it above
/// the request. The energy missed or overshot is carried into the target of
/// the next hour while the plan keeps the HVAC on, so cumulative cooling
/// follows the plan.
pub fn recover_setpoints(p_star: &Hourly, init: &PlantState, inputs: &DayInputs, plant: &PlantParams) -> Result<Recovered> {
    let mut state = init.day_start();
    let mut sp = [0.0; HOURS];
    let mut realized = [0.0; HOURS];
    let mut residual = [0.0; HOURS];
    let mut carry = 0.0;
    for h in 0..HOURS {
        let power_at = |u: f64| pi_step(u - state.t_indoor, &state, &plant.thermostat, &plant.heat_pump);
        if p_star[h] <= 0.0 {
            carry = 0.0;
        }
        let target = (p_star[h] + carry).clamp(plant.heat_pump.p_min, plant.heat_pump.p_max);
        let choice = invert_pi(&power_at, target)?;
        let out = power_at(choice)?;
        let cool = heat_pump_output(out.power, inputs.env[h].t_out, inputs.env[h].t_evap, &plant.heat_pump)?;
        state = crate::plant::sim::integrate_hour(&state, cool, &inputs.env[h], plant)?;
        state.integral_err = out.integral_err;
        state.p_prev = out.power;
        sp[h] = choice;
        realized[h] = out.power;
        residual[h] = (out.power - p_star[h]).abs();
        if p_star[h] > 0.0 {
            carry = target - out.power;
        }
        if residual[h] > 0.5 {
            log::debug!("hour {h}: requested {target:.2} kW, realized {:.2} kW at {choice:.2} °C", out.power);
        }
    }
    Ok(Recovered {
        setpoints: sp,
        power: realized,
        residual,
    })
}

/// Set-point whose PI output is closest to `target`. The output is piecewise
/// monotone in the set-point (the dead-band splits it when the HVAC was off),
/// so every bracketing grid cell is bisected. Ties go to the highest set-point
/// for a zero target and to the lowest otherwise.
fn invert_pi(power_at: &dyn Fn(f64) -> Result<crate::plant::PiOutput>, target: f64) -> Result<f64> {
    use crate::plant::sim::{SETPOINT_MAX, SETPOINT_MIN};
    const GRID: usize = 400;
    let us: Vec<f64> = (0..=GRID)
        .map(|i| SETPOINT_MIN + (SETPOINT_MAX - SETPOINT_MIN) * i as f64 / GRID as f64)
        .collect();
    let ps = us.iter().map(|&u| power_at(u).map(|o| o.power)).collect::<Result<Vec<_>>>()?;
    let mut cands: Vec<(f64, f64)> = us.iter().copied().zip(ps.iter().copied()).collect();
    for i in 0..GRID {
        let (pa, pb) = (ps[i], ps[i + 1]);
        if (pa - target) * (pb - target) < 0.0 {
            let (mut lo, mut hi) = (us[i], us[i + 1]);
            let lo_above = pa > target;
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if (power_at(mid)?.power > target) == lo_above {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cands.push((lo, power_at(lo)?.power));
            cands.push((hi, power_at(hi)?.power));
        }
    }
    let best = cands.iter().map(|&(_, p)| (p - target).abs()).fold(f64::INFINITY, f64::min);
    let ties = cands.iter().filter(|&&(_, p)| (p - target).abs() <= best + 1e-12).map(|&(u, _)| u);
    Ok(if target <= 0.0 {
        ties.fold(f64::NEG_INFINITY, f64::max)
    } else {
        ties.fold(f64::INFINITY, f64::min)
    })
}
