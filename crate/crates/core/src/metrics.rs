//! Evaluation quantities: energy cost, comfort violation, cost-reduction
//! rate and normalized RMSE.

use crate::error::{Error, Result};

/// Comfort band for one hour. `None` means unconstrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

/// Daily energy cost in dollars for hourly prices in ¢/kWh and power in kW
/// (Δt = 1 h).
pub fn energy_cost(price: &[f64], power: &[f64]) -> f64 {
    debug_assert_eq!(price.len(), power.len());
    price.iter().zip(power).map(|(c, p)| c * p).sum::<f64>() / 100.0
}

/// Accumulated excursion outside the comfort band, °C·h. Hours with a
/// `None` band are ignored.
pub fn comfort_violation(t_indoor: &[f64], band: &[Option<Band>]) -> f64 {
    debug_assert_eq!(t_indoor.len(), band.len());
    t_indoor
        .iter()
        .zip(band)
        .filter_map(|(t, b)| b.map(|b| (t - b.hi).max(0.0) + (b.lo - t).max(0.0)))
        .sum()
}

/// Occupied-hours band: `[lo, hi]` for `t_start <= h <= t_end`, else none.
pub fn occupied_band(lo: f64, hi: f64, t_start: usize, t_end: usize, hours: usize) -> Vec<Option<Band>> {
    (0..hours)
        .map(|h| (t_start..=t_end).contains(&h).then_some(Band { lo, hi }))
        .collect()
}

/// Percentage reduction of `c_case` relative to `c_rule`.
pub fn cost_reduction_rate(c_case: f64, c_rule: f64) -> Result<f64> {
    if !(c_rule > 0.0) {
        return Err(Error::Undefined("cost reduction rate needs a positive rule-based cost"));
    }
    Ok(100.0 * (c_rule - c_case) / c_rule)
}

/// How the RMSE is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NrmseNorm {
    /// Divide by max(actual) - min(actual).
    #[default]
    Range,
    /// Divide by |mean(actual)|.
    Mean,
}

pub fn rmse(actual: &[f64], estimate: &[f64]) -> f64 {
    assert_eq!(actual.len(), estimate.len(), "series length mismatch");
    if actual.is_empty() {
        return 0.0;
    }
    let ss: f64 = actual.iter().zip(estimate).map(|(a, e)| (a - e).powi(2)).sum();
    (ss / actual.len() as f64).sqrt()
}

pub fn nrmse(actual: &[f64], estimate: &[f64]) -> f64 {
    nrmse_with(actual, estimate, NrmseNorm::Range)
}

/// Normalized RMSE. A zero-width normalizer falls back to max(|actual|, 1).
pub fn nrmse_with(actual: &[f64], estimate: &[f64], norm: NrmseNorm) -> f64 {
    let r = rmse(actual, estimate);
    let denom = match norm {
        NrmseNorm::Range => {
            let (lo, hi) = actual
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
            hi - lo
        }
        NrmseNorm::Mean => (actual.iter().sum::<f64>() / actual.len().max(1) as f64).abs(),
    };
    let denom = if denom > 0.0 {
        denom
    } else {
        actual.iter().fold(1.0_f64, |m, a| m.max(a.abs()))
    };
    r / denom
}
