use super::{simulate_power, PlantParams, PlantState};
use crate::error::Result;
use crate::profile::{Environment, Hourly, HOURS};

/// Identified incremental response of the indoor temperature to power blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseResponse {
    /// `f[t][tau][n]`: °C change of T_i at hour t per kW of block n at hour tau.
    pub f: Vec<Vec<Vec<f64>>>,
    /// Indoor temperature with the HVAC off all day.
    pub t_free: Hourly,
    pub n_blocks: usize,
    pub block_width: f64,
}

impl PulseResponse {
    /// T_in^t + Σ_τ Σ_n F·δ for a block decomposition `delta[tau][n]`.
    pub fn reconstruct(&self, delta: &[Vec<f64>]) -> Hourly {
        std::array::from_fn(|t| {
            let mut v = self.t_free[t];
            for (tau, row) in delta.iter().enumerate().take(t + 1) {
                for (n, d) in row.iter().enumerate() {
                    v += self.f[t][tau][n] * d;
                }
            }
            v
        })
    }

    /// Splits an hourly power profile into blocks filled in order.
    pub fn fill_blocks(&self, power: &Hourly) -> Vec<Vec<f64>> {
        power
            .iter()
            .map(|&p| {
                (0..self.n_blocks)
                    .map(|n| (p - n as f64 * self.block_width).clamp(0.0, self.block_width))
                    .collect()
            })
            .collect()
    }
}

/// Identifies F by pulsing the power of a single hour with the thermostat
/// bypassed and everything else off.
///
/// The envelope is linear in the cooling rate, so the response of hour t to
/// power at hour tau only depends on the heat-pump curve at tau. For block n
/// the slope is the central difference about the block midpoint with a half-
/// block step, i.e. the chord over the block. Entries with tau > t are zero.
pub fn pulse_response(
    init: &PlantState,
    env: &[Environment; HOURS],
    n_blocks: usize,
    params: &PlantParams,
) -> Result<PulseResponse> {
    assert!(n_blocks >= 1, "need at least one power block");
    let width = (params.heat_pump.p_max - params.heat_pump.p_min) / n_blocks as f64;
    let free = simulate_power(init, env, &[0.0; HOURS], params)?;
    let mut f = vec![vec![vec![0.0; n_blocks]; HOURS]; HOURS];
    for tau in 0..HOURS {
        let mut edges = Vec::with_capacity(n_blocks + 1);
        for k in 0..=n_blocks {
            let mut power = [0.0; HOURS];
            power[tau] = params.heat_pump.p_min + k as f64 * width;
            edges.push(simulate_power(init, env, &power, params)?.t_indoor);
        }
        for t in tau..HOURS {
            for n in 0..n_blocks {
                f[t][tau][n] = (edges[n + 1][t] - edges[n][t]) / width;
            }
        }
    }
    Ok(PulseResponse {
        f,
        t_free: free.t_indoor,
        n_blocks,
        block_width: width,
    })
}
