use super::ScheduleParams;
use crate::composite::Predictions;
use crate::profile::{Hourly, HOURS};

/// Distance of `x` outside [lo, hi] and its slope (+1 above, -1 below, 0 inside).
pub fn hinge(x: f64, lo: f64, hi: f64) -> (f64, f64) {
    if x > hi {
        (x - hi, 1.0)
    } else if x < lo {
        (lo - x, -1.0)
    } else {
        (0.0, 0.0)
    }
}

/// k^t with its subgradient.
pub fn input_penalty(u: &Hourly, u_min: f64, u_max: f64) -> [(f64, f64); HOURS] {
    std::array::from_fn(|h| hinge(u[h], u_min, u_max))
}

/// Hinge distances of the predicted state s^t = [T_i, Q, P, ΔP].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StatePenalty {
    pub t_indoor: (f64, f64),
    pub cooling: (f64, f64),
    pub power: (f64, f64),
    pub ramp: (f64, f64),
}

/// Comfort applies the occupied band only in occupied hours. ΔP uses P̂ = 0
/// before the first hour.
pub fn state_penalty(pred: &Predictions, prm: &ScheduleParams) -> [StatePenalty; HOURS] {
    std::array::from_fn(|h| {
        let (lo, hi) = prm.band(h);
        let prev = if h == 0 { 0.0 } else { pred.p[h - 1] };
        StatePenalty {
            t_indoor: hinge(pred.t_indoor[h], lo, hi),
            cooling: pred.q.map_or((0.0, 0.0), |q| hinge(q[h], 0.0, f64::INFINITY)),
            power: hinge(pred.p[h], prm.p_min, prm.p_max),
            ramp: hinge(pred.p[h] - prev, prm.r_down, prm.r_up),
        }
    })
}
