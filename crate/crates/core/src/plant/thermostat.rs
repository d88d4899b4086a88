use super::{HeatPumpParams, PlantState, ThermostatParams};
use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiOutput {
    /// Commanded power for the hour, kW.
    pub power: f64,
    /// Updated Σe.
    pub integral_err: f64,
}

/// One hourly PI update. `err` is T_set^t - T_i^{t-1}; a negative error (room
/// too warm) raises the cooling power.
///
/// The raw reference P_O - k_p·e - k_i·Σe is clipped to the ramp window around
/// the previous power and then to [p_min, p_max]. The integral only
/// accumulates when that does not push further into saturation. With the HVAC
/// off and |e| < D_T/2 the output stays at zero.
pub fn pi_step(
    err: f64,
    state: &PlantState,
    params: &ThermostatParams,
    hp: &HeatPumpParams,
) -> Result<PiOutput> {
    ensure_finite("thermostat error", err)?;
    ensure_finite("integral error", state.integral_err)?;
    ensure_finite("previous power", state.p_prev)?;
    let bound = params.integral_bound();
    if state.integral_err.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            what: "integral error",
            value: state.integral_err,
            lo: -bound,
            hi: bound,
        });
    }

    if state.p_prev == 0.0 && err.abs() < params.deadband / 2.0 {
        return Ok(PiOutput {
            power: 0.0,
            integral_err: state.integral_err,
        });
    }

    let candidate = (state.integral_err + err).clamp(-bound, bound);
    let raw = params.p_offset - params.k_p * err - params.k_i * candidate;
    let lo = (state.p_prev + params.r_down).max(hp.p_min);
    let hi = (state.p_prev + params.r_up).min(hp.p_max);
    let power = raw.clamp(lo, hi);

    let unwinding = (raw > hi && err > 0.0) || (raw < lo && err < 0.0);
    let integral_err = if (lo..=hi).contains(&raw) || unwinding {
        candidate
    } else {
        state.integral_err
    };
    Ok(PiOutput {
        power,
        integral_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains(k_p: f64, k_i: f64) -> ThermostatParams {
        ThermostatParams {
            k_p,
            k_i,
            ..ThermostatParams::default()
        }
    }

    #[test]
    fn zero_error_zero_output() {
        let s = PlantState::uniform(23.0);
        let out = pi_step(0.0, &s, &gains(2.0, 2.0), &HeatPumpParams::default()).unwrap();
        assert_eq!(out.power, 0.0);
    }

    #[test]
    fn warm_room_raises_cooling() {
        let s = PlantState::uniform(25.0);
        let out = pi_step(-2.0, &s, &gains(5.0, 0.0), &HeatPumpParams::default()).unwrap();
        assert_eq!(out.power, 10.0);
    }

    #[test]
    fn ramp_up_limited() {
        // unconstrained reference of 40 kW from a standing start
        let s = PlantState::uniform(30.0);
        let out = pi_step(-8.0, &s, &gains(5.0, 0.0), &HeatPumpParams::default()).unwrap();
        assert_eq!(out.power, 30.0);
    }

    #[test]
    fn ramp_down_limited() {
        let s = PlantState {
            p_prev: 50.0,
            ..PlantState::uniform(20.0)
        };
        let out = pi_step(3.0, &s, &gains(5.0, 0.0), &HeatPumpParams::default()).unwrap();
        assert_eq!(out.power, 10.0);
    }

    #[test]
    fn deadband_holds_off() {
        let s = PlantState::uniform(23.3);
        let out = pi_step(-0.3, &s, &gains(5.0, 1.0), &HeatPumpParams::default()).unwrap();
        assert_eq!(out.power, 0.0);
        assert_eq!(out.integral_err, 0.0);
        // once running, small errors are acted on
        let s = PlantState {
            p_prev: 4.0,
            ..s
        };
        let out = pi_step(-0.3, &s, &gains(5.0, 1.0), &HeatPumpParams::default()).unwrap();
        assert!(out.power > 0.0);
    }

    #[test]
    fn no_windup_while_saturated() {
        let p = gains(2.0, 2.0);
        let hp = HeatPumpParams::default();
        // cold room, output pinned at zero: integral must not grow positive
        let s = PlantState {
            p_prev: 1.0,
            ..PlantState::uniform(18.0)
        };
        let out = pi_step(5.0, &s, &p, &hp).unwrap();
        assert_eq!(out.power, 0.0);
        assert_eq!(out.integral_err, 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let s = PlantState::uniform(23.0);
        let p = gains(1.0, 1.0);
        assert!(pi_step(f64::NAN, &s, &p, &HeatPumpParams::default()).is_err());
        let bad = PlantState {
            integral_err: f64::INFINITY,
            ..s
        };
        assert!(pi_step(0.0, &bad, &p, &HeatPumpParams::default()).is_err());
    }

    #[test]
    fn higher_setpoint_never_more_power() {
        let hp = HeatPumpParams::default();
        let p = ThermostatParams::default();
        for &(t_i, integ, p_prev) in &[(24.0, -3.0, 5.0), (23.0, 0.0, 0.0), (26.0, -10.0, 20.0), (21.0, 2.0, 3.0)] {
            let s = PlantState {
                t_indoor: t_i,
                t_mass: t_i,
                integral_err: integ,
                p_prev,
            };
            let mut last = f64::INFINITY;
            for k in 0..=200 {
                let t_set = 15.0 + 0.1 * k as f64;
                let out = pi_step(t_set - t_i, &s, &p, &hp).unwrap();
                assert!(out.power <= last + 1e-12, "t_set {t_set}");
                last = out.power;
            }
        }
    }
}
