use super::HeatPumpParams;
use crate::error::{ensure_finite, Error, Result};

/// Thermal cooling output for electrical input `p`:
/// Q = p · max(1, cop0 - k_lift·(t_out - t_evap)) · plf(p / p_max).
pub fn heat_pump_output(p: f64, t_out: f64, t_evap: f64, params: &HeatPumpParams) -> Result<f64> {
    ensure_finite("heat pump power", p)?;
    ensure_finite("t_out", t_out)?;
    ensure_finite("t_evap", t_evap)?;
    let slack = 1e-9 * params.p_max;
    if p < params.p_min - slack || p > params.p_max + slack {
        return Err(Error::OutOfRange {
            what: "heat pump power",
            value: p,
            lo: params.p_min,
            hi: params.p_max,
        });
    }
    let cop = (params.cop0 - params.k_lift * (t_out - t_evap)).max(1.0);
    let x = p / params.p_max;
    let [c0, c1, c2] = params.part_load;
    let plf = c0 + c1 * x + c2 * x * x;
    Ok((p * cop * plf).max(0.0))
}
