use super::{envelope_substep, heat_pump_output, pi_step, PlantParams, PlantState};
use crate::error::{Error, Result};
use crate::profile::{DayInputs, DayProfile, Environment, Hourly, HOURS};

pub const SETPOINT_MIN: f64 = 15.0;
pub const SETPOINT_MAX: f64 = 35.0;

/// Integrates one hour at constant cooling. Returns the end-of-hour state.
pub(crate) fn integrate_hour(
    state: &PlantState,
    q_cool: f64,
    env: &Environment,
    params: &PlantParams,
) -> Result<PlantState> {
    let dt = params.dt();
    let mut s = *state;
    for _ in 0..params.substeps {
        s = envelope_substep(&s, q_cool, env, &params.envelope, dt)?;
    }
    Ok(s)
}

/// Closed-loop day: thermostat, heat pump and envelope.
///
/// The thermostat acts once per hour on e = T_set^t - T_i^{t-1} and holds its
/// power for the hour, so hourly P is exact rather than averaged. The HVAC is
/// treated as off in the hour before the day starts (P^0 = 0, Σe reset).
pub fn simulate_day(
    init: &PlantState,
    inputs: &DayInputs,
    setpoints: &Hourly,
    params: &PlantParams,
) -> Result<(DayProfile, PlantState)> {
    for &sp in setpoints {
        if !sp.is_finite() {
            return Err(Error::NonFinite("set-point"));
        }
        if !(SETPOINT_MIN..=SETPOINT_MAX).contains(&sp) {
            return Err(Error::OutOfRange {
                what: "set-point",
                value: sp,
                lo: SETPOINT_MIN,
                hi: SETPOINT_MAX,
            });
        }
    }
    let mut state = init.day_start();
    let mut p = [0.0; HOURS];
    let mut q = [0.0; HOURS];
    let mut t = [0.0; HOURS];
    for h in 0..HOURS {
        let env = &inputs.env[h];
        env.validate()?;
        let out = pi_step(
            setpoints[h] - state.t_indoor,
            &state,
            &params.thermostat,
            &params.heat_pump,
        )?;
        let cool = heat_pump_output(out.power, env.t_out, env.t_evap, &params.heat_pump)?;
        state = integrate_hour(&state, cool, env, params)?;
        state.integral_err = out.integral_err;
        state.p_prev = out.power;
        p[h] = out.power;
        q[h] = cool;
        t[h] = state.t_indoor;
    }
    Ok((
        DayProfile {
            day: inputs.day,
            price: inputs.price,
            env: inputs.env,
            t_set: *setpoints,
            p,
            q,
            t_indoor: t,
        },
        state,
    ))
}

/// Result of driving the plant with a direct power command.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRun {
    pub p: Hourly,
    pub q: Hourly,
    pub t_indoor: Hourly,
    pub final_state: PlantState,
}

/// Open-loop day with the thermostat bypassed: `power[h]` is applied directly.
pub fn simulate_power(
    init: &PlantState,
    env: &[Environment; HOURS],
    power: &Hourly,
    params: &PlantParams,
) -> Result<PowerRun> {
    let mut state = init.day_start();
    let mut q = [0.0; HOURS];
    let mut t = [0.0; HOURS];
    for h in 0..HOURS {
        let cool = heat_pump_output(power[h], env[h].t_out, env[h].t_evap, &params.heat_pump)?;
        state = integrate_hour(&state, cool, &env[h], params)?;
        state.p_prev = power[h];
        q[h] = cool;
        t[h] = state.t_indoor;
    }
    Ok(PowerRun {
        p: *power,
        q,
        t_indoor: t,
        final_state: state,
    })
}
