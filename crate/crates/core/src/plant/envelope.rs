use super::{EnvelopeParams, PlantState};
use crate::error::{Error, Result};
use crate::profile::Environment;

const MAX_STEP_DELTA: f64 = 5.0;

/// Forward-Euler step of the two-node RC network:
///
/// c_air·dT_i/dt = (T_x - T_i)/r_ax + (T_m - T_i)/r_ma + Q_i - q_cool
/// c_mass·dT_m/dt = (T_i - T_m)/r_ma + (T_x - T_m)/r_xm
pub fn envelope_substep(
    state: &PlantState,
    q_cool: f64,
    env: &Environment,
    params: &EnvelopeParams,
    dt: f64,
) -> Result<PlantState> {
    if !(dt > 0.0 && dt <= 1.0 / 30.0 + 1e-15) {
        return Err(Error::InvalidParam {
            name: "dt",
            reason: format!("substep {dt} h outside (0, 1/30]"),
        });
    }
    let (ti, tm, tx) = (state.t_indoor, state.t_mass, env.t_out);
    let flow_air = (tx - ti) / params.r_ax + (tm - ti) / params.r_ma + env.q_internal - q_cool;
    let flow_mass = (ti - tm) / params.r_ma + (tx - tm) / params.r_xm;
    let d_air = dt * flow_air / params.c_air;
    let d_mass = dt * flow_mass / params.c_mass;
    if !d_air.is_finite() || d_air.abs() > MAX_STEP_DELTA {
        return Err(Error::Unstable {
            node: "air",
            param: "c_air",
            delta: d_air.abs(),
        });
    }
    if !d_mass.is_finite() || d_mass.abs() > MAX_STEP_DELTA {
        return Err(Error::Unstable {
            node: "mass",
            param: "c_mass",
            delta: d_mass.abs(),
        });
    }
    Ok(PlantState {
        t_indoor: ti + d_air,
        t_mass: tm + d_mass,
        ..*state
    })
}

/// Equilibrium (T_i, T_m) for constant inputs.
pub fn steady_state(q_cool: f64, env: &Environment, params: &EnvelopeParams) -> (f64, f64) {
    let g_ax = 1.0 / params.r_ax;
    let g_ma = 1.0 / params.r_ma;
    let g_xm = 1.0 / params.r_xm;
    // mass node: T_m = (g_ma·T_i + g_xm·T_x) / (g_ma + g_xm)
    let a = g_ma / (g_ma + g_xm);
    let b = g_xm / (g_ma + g_xm);
    // air node with T_m substituted
    let coeff = g_ax + g_ma - g_ma * a;
    let rhs = g_ax * env.t_out + g_ma * b * env.t_out + env.q_internal - q_cool;
    let ti = rhs / coeff;
    (ti, a * ti + b * env.t_out)
}
