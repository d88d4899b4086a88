//! Synthetic weather, internal load and price series plus the rule-based
//! initial dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::online::DataStore;
use crate::plant::{simulate_day, PlantParams, PlantState};
use crate::profile::{DayInputs, Environment, Hourly, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceKind {
    TimeOfUse,
    Volatile,
    Flat,
}

impl std::str::FromStr for PriceKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "time_of_use" | "tou" => Ok(Self::TimeOfUse),
            "volatile" => Ok(Self::Volatile),
            "flat" => Ok(Self::Flat),
            other => Err(format!("unknown price kind `{other}` (time_of_use | volatile | flat)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Days in the rule-based initial dataset.
    pub initial_days: usize,
    /// Daily mean outdoor temperature, °C.
    pub weather_mean: f64,
    /// Half peak-to-trough swing of the outdoor temperature, °C.
    pub weather_amp: f64,
    pub weather_peak_hour: f64,
    /// Standard deviation and clip of the day-level offset, °C.
    pub day_offset_sd: f64,
    pub day_offset_clip: f64,
    pub weather_noise_sd: f64,
    pub t_evap: f64,
    pub t_evap_noise_sd: f64,
    pub t_adj: f64,
    pub t_adj_noise_sd: f64,
    /// Occupied period [t_start, t_end], hour indices.
    pub t_start: usize,
    pub t_end: usize,
    pub load_base: f64,
    pub load_plateau: f64,
    pub load_noise_sd: f64,
    pub price_kind: PriceKind,
    /// Per-day probability of negative early-morning prices (volatile kind).
    pub negative_price_prob: f64,
    /// Flat price level, ¢/kWh.
    pub flat_price: f64,
    /// Set-point menu for the rule-based initial data, °C.
    pub setpoint_menu: Vec<f64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            initial_days: 50,
            weather_mean: 27.0,
            weather_amp: 6.0,
            weather_peak_hour: 15.0,
            day_offset_sd: 2.0,
            day_offset_clip: 3.0,
            weather_noise_sd: 0.3,
            t_evap: 12.0,
            t_evap_noise_sd: 0.2,
            t_adj: 25.0,
            t_adj_noise_sd: 0.3,
            t_start: 7,
            t_end: 19,
            load_base: 3.0,
            load_plateau: 10.0,
            load_noise_sd: 0.3,
            price_kind: PriceKind::TimeOfUse,
            negative_price_prob: 0.15,
            flat_price: 6.0,
            setpoint_menu: vec![22.0, 22.5, 23.0, 23.5, 24.0],
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Weather = 1,
    Load = 2,
    Price = 3,
    Setpoint = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for a (seed, day, stream) triple.
pub fn derive_rng(seed: u64, day: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(seed ^ splitmix(day)) ^ stream))
}

fn rng_for(cfg: &GenConfig, day: u32, stream: Stream) -> ChaCha8Rng {
    derive_rng(cfg.seed, day as u64, stream as u64)
}

fn gauss(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(0.0, sd).expect("finite sd").sample(rng)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weather {
    pub t_out: Hourly,
    pub t_evap: Hourly,
    pub t_adj: Hourly,
}

pub fn gen_weather(day: u32, cfg: &GenConfig) -> Weather {
    let mut rng = rng_for(cfg, day, Stream::Weather);
    let offset = gauss(&mut rng, cfg.day_offset_sd).clamp(-cfg.day_offset_clip, cfg.day_offset_clip);
    let mut w = Weather {
        t_out: [0.0; HOURS],
        t_evap: [0.0; HOURS],
        t_adj: [0.0; HOURS],
    };
    for h in 0..HOURS {
        let phase = 2.0 * std::f64::consts::PI * (h as f64 - cfg.weather_peak_hour) / HOURS as f64;
        w.t_out[h] = cfg.weather_mean + offset + cfg.weather_amp * phase.cos() + gauss(&mut rng, cfg.weather_noise_sd);
        w.t_evap[h] = cfg.t_evap + gauss(&mut rng, cfg.t_evap_noise_sd);
        w.t_adj[h] = cfg.t_adj + gauss(&mut rng, cfg.t_adj_noise_sd);
    }
    w
}

fn occupancy_fraction(h: usize, t_start: usize, t_end: usize) -> f64 {
    // ramps: people arrive over the two hours before t_start and leave after t_end
    if h + 2 == t_start {
        0.25
    } else if h + 1 == t_start {
        0.5
    } else if h == t_start {
        0.75
    } else if h > t_start && h < t_end {
        1.0
    } else if h == t_end {
        0.6
    } else if h == t_end + 1 {
        0.3
    } else {
        0.0
    }
}

pub fn gen_internal_load(day: u32, cfg: &GenConfig) -> Hourly {
    let mut rng = rng_for(cfg, day, Stream::Load);
    std::array::from_fn(|h| {
        let frac = occupancy_fraction(h, cfg.t_start, cfg.t_end);
        let q = cfg.load_base + frac * (cfg.load_plateau - cfg.load_base) + gauss(&mut rng, cfg.load_noise_sd);
        q.max(0.0)
    })
}

/// Price series for `day`. `force_negative` overrides the random draw of
/// negative early-morning hours for the volatile kind.
pub fn gen_price_with(day: u32, cfg: &GenConfig, force_negative: Option<bool>) -> Hourly {
    let mut rng = rng_for(cfg, day, Stream::Price);
    match cfg.price_kind {
        PriceKind::Flat => [cfg.flat_price; HOURS],
        PriceKind::TimeOfUse => {
            let scale = rng.gen_range(0.9..1.1);
            std::array::from_fn(|h| {
                let level = match h {
                    0..=6 | 22..=23 => 2.5,
                    7..=11 => 6.0,
                    12..=18 => 11.0,
                    _ => 5.0,
                };
                level * scale
            })
        }
        PriceKind::Volatile => {
            let peak_hour = rng.gen_range(13..=17) as f64;
            let peak = rng.gen_range(9.0..12.1);
            let negative = force_negative.unwrap_or_else(|| rng.gen_bool(cfg.negative_price_prob));
            let mut c: Hourly = std::array::from_fn(|h| {
                let x = h as f64;
                let day_shape = 3.0 + 2.0 * (-(x - 12.0).powi(2) / 40.0).exp();
                let spike = (peak - 5.0) * (-(x - peak_hour).powi(2) / 3.0).exp();
                day_shape + spike + gauss(&mut rng, 0.15)
            });
            if negative {
                for h in [3, 5] {
                    c[h] = -rng.gen_range(0.5..2.5);
                }
            }
            c
        }
    }
}

pub fn gen_price(day: u32, cfg: &GenConfig) -> Hourly {
    gen_price_with(day, cfg, None)
}

pub fn gen_day_inputs(day: u32, cfg: &GenConfig) -> DayInputs {
    let w = gen_weather(day, cfg);
    let q = gen_internal_load(day, cfg);
    DayInputs {
        day,
        price: gen_price(day, cfg),
        env: std::array::from_fn(|h| Environment {
            t_out: w.t_out[h],
            t_evap: w.t_evap[h],
            t_adj: w.t_adj[h],
            q_internal: q[h],
        }),
    }
}

/// Set-point drawn from the menu for an initial rule-based day.
pub fn rule_setpoint(day: u32, cfg: &GenConfig) -> f64 {
    let mut rng = rng_for(cfg, day, Stream::Setpoint);
    cfg.setpoint_menu[rng.gen_range(0..cfg.setpoint_menu.len())]
}

/// Day index of the prelude day that seeds history for the first archived day.
pub const PRELUDE_DAY: u32 = 0;
const WARMUP_DAYS: usize = 3;

/// Simulates the rule-based initial dataset.
///
/// Three warm-up days at 23 °C settle the envelope mass, a prelude day
/// provides the lag history, then `cfg.initial_days` archived days follow
/// with set-points drawn per day from the menu.
pub fn gen_initial_dataset(cfg: &GenConfig, plant: &PlantParams) -> Result<(DataStore, PlantState)> {
    plant.validate()?;
    let mut state = PlantState::uniform(24.0);
    let prelude_inputs = gen_day_inputs(PRELUDE_DAY, cfg);
    for _ in 0..WARMUP_DAYS {
        state = simulate_day(&state, &prelude_inputs, &[23.0; HOURS], plant)?.1;
    }
    let (prelude, s) = simulate_day(&state, &prelude_inputs, &[23.0; HOURS], plant)?;
    state = s;
    let mut days = Vec::with_capacity(cfg.initial_days);
    for i in 0..cfg.initial_days {
        let day = PRELUDE_DAY + 1 + i as u32;
        let sp = rule_setpoint(day, cfg);
        let (profile, s) = simulate_day(&state, &gen_day_inputs(day, cfg), &[sp; HOURS], plant)?;
        state = s;
        days.push(profile);
    }
    Ok((DataStore::new(prelude, days, cfg.seed), state))
}
