//! Physics ground truth: RC building envelope, variable-speed heat pump and
//! an hourly PI thermostat with ramp limits, saturation and a dead-band.
//!
//! All functions are pure over value-typed state.

mod envelope;
mod heat_pump;
mod pulse;
pub(crate) mod sim;
mod thermostat;

pub use envelope::{envelope_substep, steady_state};
pub use heat_pump::heat_pump_output;
pub use pulse::{pulse_response, PulseResponse};
pub use sim::{simulate_day, simulate_power, PowerRun};
pub use thermostat::{pi_step, PiOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    /// Indoor air node capacitance, kWh/°C.
    pub c_air: f64,
    /// Envelope mass node capacitance, kWh/°C.
    pub c_mass: f64,
    /// Air to outdoor resistance, °C/kW.
    pub r_ax: f64,
    /// Mass to air resistance, °C/kW.
    pub r_ma: f64,
    /// Mass to outdoor resistance, °C/kW.
    pub r_xm: f64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            c_air: 6.0,
            c_mass: 28.0,
            r_ax: 2.0,
            r_ma: 0.15,
            r_xm: 2.5,
        }
    }
}

impl EnvelopeParams {
    /// Mass time constant c_mass·r_ma in hours.
    pub fn mass_time_constant(&self) -> f64 {
        self.c_mass * self.r_ma
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_air", self.c_air),
            ("c_mass", self.c_mass),
            ("r_ax", self.r_ax),
            ("r_ma", self.r_ma),
            ("r_xm", self.r_xm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        let tau = self.mass_time_constant();
        if !(1.0..=12.0).contains(&tau) {
            return Err(Error::InvalidParam {
                name: "c_mass",
                reason: format!("mass time constant {tau:.2} h outside [1, 12]"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatPumpParams {
    pub cop0: f64,
    /// COP loss per °C of lift (t_out - t_evap).
    pub k_lift: f64,
    /// Part-load factor coefficients: plf(x) = c0 + c1·x + c2·x².
    pub part_load: [f64; 3],
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for HeatPumpParams {
    fn default() -> Self {
        Self {
            cop0: 3.5,
            k_lift: 0.06,
            part_load: [1.0, 0.0, -0.2],
            p_min: 0.0,
            p_max: 50.0,
        }
    }
}

impl HeatPumpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cop0 > 1.0) {
            return Err(Error::InvalidParam {
                name: "cop0",
                reason: format!("must exceed 1, got {}", self.cop0),
            });
        }
        if !(self.p_max > self.p_min && self.p_min >= 0.0) {
            return Err(Error::InvalidParam {
                name: "p_max",
                reason: format!("need 0 <= p_min < p_max, got [{}, {}]", self.p_min, self.p_max),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermostatParams {
    /// Proportional gain, kW/°C.
    pub k_p: f64,
    /// Integral gain, kW/°C per hourly step.
    pub k_i: f64,
    /// Reference offset P_O, kW.
    pub p_offset: f64,
    /// Dead-band D_T, °C.
    pub deadband: f64,
    /// Downward ramp limit R_L, kW/h (negative).
    pub r_down: f64,
    /// Upward ramp limit R_H, kW/h.
    pub r_up: f64,
    /// Bound on |k_i·Σe|, kW.
    pub anti_windup: f64,
}

impl Default for ThermostatParams {
    fn default() -> Self {
        Self {
            k_p: 2.0,
            k_i: 2.0,
            p_offset: 0.0,
            deadband: 1.0,
            r_down: -40.0,
            r_up: 30.0,
            anti_windup: 50.0,
        }
    }
}

impl ThermostatParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_p < 0.0 || self.k_i < 0.0 {
            return Err(Error::InvalidParam {
                name: "k_p",
                reason: "gains must be non-negative".into(),
            });
        }
        if !(self.r_down < 0.0 && self.r_up > 0.0) {
            return Err(Error::InvalidParam {
                name: "r_up",
                reason: format!("need r_down < 0 < r_up, got {} / {}", self.r_down, self.r_up),
            });
        }
        Ok(())
    }

    /// Largest admissible |Σe| given the anti-windup bound.
    pub fn integral_bound(&self) -> f64 {
        if self.k_i > 0.0 {
            self.anti_windup / self.k_i
        } else {
            f64::INFINITY
        }
    }
}

/// Complete plant configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub envelope: EnvelopeParams,
    pub heat_pump: HeatPumpParams,
    pub thermostat: ThermostatParams,
    /// Forward-Euler substeps per hour.
    pub substeps: usize,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            envelope: EnvelopeParams::default(),
            heat_pump: HeatPumpParams::default(),
            thermostat: ThermostatParams::default(),
            substeps: 60,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        self.envelope.validate()?;
        self.heat_pump.validate()?;
        self.thermostat.validate()?;
        if self.substeps < 30 {
            return Err(Error::InvalidParam {
                name: "substeps",
                reason: format!("need at least 30 substeps per hour, got {}", self.substeps),
            });
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.substeps as f64
    }
}

/// Dynamic plant state carried between hours and days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub t_indoor: f64,
    pub t_mass: f64,
    /// Accumulated thermostat error Σe, °C·steps.
    pub integral_err: f64,
    /// Power of the previous hour, kW.
    pub p_prev: f64,
}

impl PlantState {
    /// Building at rest at a uniform temperature with the HVAC off.
    pub fn uniform(t: f64) -> Self {
        Self {
            t_indoor: t,
            t_mass: t,
            integral_err: 0.0,
            p_prev: 0.0,
        }
    }

    /// Start-of-day state: HVAC treated as off in the hour before the day.
    pub fn day_start(&self) -> Self {
        Self {
            integral_err: 0.0,
            p_prev: 0.0,
            ..*self
        }
    }
}
