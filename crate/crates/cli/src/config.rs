//! Flat `key = value` run configuration.
//!
//! Precedence: preset defaults, then the file, then `HVAC_<KEY>` environment
//! variables, then command-line flags.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hvac_core::composite::Topology;
use hvac_core::datagen::PriceKind;
use hvac_core::netcore::Optimizer;
use hvac_core::online::OnlineConfig;
use hvac_core::profile::HOURS;
use hvac_core::scheduler::{ObjectiveForm, ScheduleParams};

pub const ENV_PREFIX: &str = "HVAC_";

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow::anyhow!("{key}: cannot parse `{v}`: {e}"))
}

fn optimizer(key: &str, v: &str) -> Result<Optimizer> {
    match v {
        "adam" => Ok(Optimizer::Adam),
        "gd" => Ok(Optimizer::Gd),
        _ => bail!("{key}: expected adam or gd, got `{v}`"),
    }
}

fn optimizer_name(o: Optimizer) -> &'static str {
    match o {
        Optimizer::Adam => "adam",
        Optimizer::Gd => "gd",
    }
}

/// Every recognized key, in echo order.
pub const KEYS: &[&str] = &[
    "preset", "seed", "p_min", "p_max", "r_l", "r_h", "l_p", "n_t", "dt", "dt_u", "t_s", "t_e", "t_i_min", "t_i_max",
    "t_set_min", "t_set_max", "d_t", "n_d", "n_s", "n_id", "n_hl1", "n_hl2", "n_hl3", "n_hn1", "n_hn2", "n_hn3", "n_et",
    "n_eo", "r_t", "r_o", "lambda_y", "lambda_k", "lambda_h", "warm_epochs", "batch_size", "train_optimizer",
    "schedule_optimizer", "objective", "restarts", "price_kind", "topology", "margin_gain", "margin_min", "margin_max", "replay_days", "replay_copies", "ideal_margin",
    "comfort_penalty", "eval_days",
];

/// Full-scale settings: deep networks, long budgets, plain gradient steps.
pub fn full_preset(seed: u64) -> OnlineConfig {
    let mut c = OnlineConfig::desk(seed);
    c.n_days = 200;
    c.composite = hvac_core::composite::CompositeConfig {
        seed,
        ..Default::default()
    };
    c.warm = hvac_core::netcore::TrainConfig {
        epochs: c.composite.train.epochs / 10,
        ..c.composite.train
    };
    c.schedule = ScheduleParams {
        seed,
        ..ScheduleParams::default()
    };
    c
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub preset: String,
    pub cfg: OnlineConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            preset: "desk".into(),
            cfg: OnlineConfig::desk(0),
        }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let c = &mut self.cfg;
        match key {
            "preset" => {
                let seed = c.seed;
                *c = match v {
                    "desk" => OnlineConfig::desk(seed),
                    "full" => full_preset(seed),
                    _ => bail!("preset: expected desk or full, got `{v}`"),
                };
                self.preset = v.into();
            }
            "seed" => {
                let s: u64 = num(key, v)?;
                c.seed = s;
                c.gen.seed = s;
                c.composite.seed = s;
                c.schedule.seed = s;
            }
            "p_min" | "p_max" => {
                let x: f64 = num(key, v)?;
                if key == "p_min" {
                    c.plant.heat_pump.p_min = x;
                    c.composite.p_min = x;
                    c.schedule.p_min = x;
                } else {
                    c.plant.heat_pump.p_max = x;
                    c.composite.p_max = x;
                    c.schedule.p_max = x;
                }
            }
            "r_l" => {
                let x = num(key, v)?;
                c.plant.thermostat.r_down = x;
                c.schedule.r_down = x;
            }
            "r_h" => {
                let x = num(key, v)?;
                c.plant.thermostat.r_up = x;
                c.schedule.r_up = x;
            }
            "l_p" => c.composite.seq_len = num(key, v)?,
            "n_t" => {
                if num::<usize>(key, v)? != HOURS {
                    bail!("n_t: only {HOURS} is supported");
                }
            }
            "dt" => {
                if num::<f64>(key, v)? != 1.0 {
                    bail!("dt: only 1 h is supported");
                }
            }
            "dt_u" => c.update_period = num(key, v)?,
            "t_s" => {
                c.schedule.t_start = num(key, v)?;
                c.gen.t_start = c.schedule.t_start;
            }
            "t_e" => {
                c.schedule.t_end = num(key, v)?;
                c.gen.t_end = c.schedule.t_end;
            }
            "t_i_min" => c.schedule.t_min = num(key, v)?,
            "t_i_max" => c.schedule.t_max = num(key, v)?,
            "t_set_min" => c.schedule.u_min = num(key, v)?,
            "t_set_max" => c.schedule.u_max = num(key, v)?,
            "d_t" => c.plant.thermostat.deadband = num(key, v)?,
            "n_d" => c.n_days = num(key, v)?,
            "n_s" => c.n_blocks = num(key, v)?,
            "n_id" => {
                let n: usize = num(key, v)?;
                if n % HOURS != 0 {
                    bail!("n_id: must be a multiple of {HOURS}, got {n}");
                }
                c.gen.initial_days = n / HOURS;
            }
            "n_hl1" => c.composite.n_layers[0] = num(key, v)?,
            "n_hl2" => c.composite.n_layers[1] = num(key, v)?,
            "n_hl3" => c.composite.n_layers[2] = num(key, v)?,
            "n_hn1" => c.composite.n_hidden[0] = num(key, v)?,
            "n_hn2" => c.composite.n_hidden[1] = num(key, v)?,
            "n_hn3" => c.composite.n_hidden[2] = num(key, v)?,
            "n_et" => c.composite.train.epochs = num(key, v)?,
            "n_eo" => c.schedule.epochs = num(key, v)?,
            "r_t" => {
                c.composite.train.lr = num(key, v)?;
                c.warm.lr = c.composite.train.lr;
            }
            "r_o" => c.schedule.lr = num(key, v)?,
            "lambda_y" => c.schedule.lambda_y = num(key, v)?,
            "lambda_k" => c.schedule.lambda_k = num(key, v)?,
            "lambda_h" => c.schedule.lambda_h = num(key, v)?,
            "warm_epochs" => c.warm.epochs = num(key, v)?,
            "batch_size" => {
                c.composite.train.batch_size = num(key, v)?;
                c.warm.batch_size = c.composite.train.batch_size;
            }
            "train_optimizer" => {
                c.composite.train.optimizer = optimizer(key, v)?;
                c.warm.optimizer = c.composite.train.optimizer;
            }
            "schedule_optimizer" => c.schedule.step_rule = optimizer(key, v)?,
            "objective" => c.schedule.form = v.parse::<ObjectiveForm>().map_err(anyhow::Error::msg)?,
            "restarts" => c.schedule.restarts = num(key, v)?,
            "price_kind" => c.gen.price_kind = v.parse::<PriceKind>().map_err(anyhow::Error::msg)?,
            "topology" => c.composite.topology = v.parse::<Topology>().map_err(anyhow::Error::msg)?,
            "margin_gain" => c.margin.gain = num(key, v)?,
            "margin_min" => c.margin.min = num(key, v)?,
            "margin_max" => c.margin.max = num(key, v)?,
            "replay_days" => c.replay.days = num(key, v)?,
            "replay_copies" => c.replay.copies = num(key, v)?,
            "ideal_margin" => c.ideal_margin = num(key, v)?,
            "comfort_penalty" => c.comfort_penalty = num(key, v)?,
            "eval_days" => c.eval_days = num(key, v)?,
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let c = &self.cfg;
        match key {
            "preset" => self.preset.clone(),
            "seed" => c.seed.to_string(),
            "p_min" => c.plant.heat_pump.p_min.to_string(),
            "p_max" => c.plant.heat_pump.p_max.to_string(),
            "r_l" => c.plant.thermostat.r_down.to_string(),
            "r_h" => c.plant.thermostat.r_up.to_string(),
            "l_p" => c.composite.seq_len.to_string(),
            "n_t" => HOURS.to_string(),
            "dt" => "1".into(),
            "dt_u" => c.update_period.to_string(),
            "t_s" => c.schedule.t_start.to_string(),
            "t_e" => c.schedule.t_end.to_string(),
            "t_i_min" => c.schedule.t_min.to_string(),
            "t_i_max" => c.schedule.t_max.to_string(),
            "t_set_min" => c.schedule.u_min.to_string(),
            "t_set_max" => c.schedule.u_max.to_string(),
            "d_t" => c.plant.thermostat.deadband.to_string(),
            "n_d" => c.n_days.to_string(),
            "n_s" => c.n_blocks.to_string(),
            "n_id" => (c.gen.initial_days * HOURS).to_string(),
            "n_hl1" => c.composite.n_layers[0].to_string(),
            "n_hl2" => c.composite.n_layers[1].to_string(),
            "n_hl3" => c.composite.n_layers[2].to_string(),
            "n_hn1" => c.composite.n_hidden[0].to_string(),
            "n_hn2" => c.composite.n_hidden[1].to_string(),
            "n_hn3" => c.composite.n_hidden[2].to_string(),
            "n_et" => c.composite.train.epochs.to_string(),
            "n_eo" => c.schedule.epochs.to_string(),
            "r_t" => c.composite.train.lr.to_string(),
            "r_o" => c.schedule.lr.to_string(),
            "lambda_y" => c.schedule.lambda_y.to_string(),
            "lambda_k" => c.schedule.lambda_k.to_string(),
            "lambda_h" => c.schedule.lambda_h.to_string(),
            "warm_epochs" => c.warm.epochs.to_string(),
            "batch_size" => c.composite.train.batch_size.to_string(),
            "train_optimizer" => optimizer_name(c.composite.train.optimizer).into(),
            "schedule_optimizer" => optimizer_name(c.schedule.step_rule).into(),
            "objective" => match c.schedule.form {
                ObjectiveForm::Quadratic => "quadratic".into(),
                ObjectiveForm::Signed => "signed".into(),
            },
            "restarts" => c.schedule.restarts.to_string(),
            "price_kind" => match c.gen.price_kind {
                PriceKind::TimeOfUse => "time_of_use".into(),
                PriceKind::Volatile => "volatile".into(),
                PriceKind::Flat => "flat".into(),
            },
            "topology" => c.composite.topology.name().into(),
            "margin_gain" => c.margin.gain.to_string(),
            "margin_min" => c.margin.min.to_string(),
            "margin_max" => c.margin.max.to_string(),
            "replay_days" => c.replay.days.to_string(),
            "replay_copies" => c.replay.copies.to_string(),
            "ideal_margin" => c.ideal_margin.to_string(),
            "comfort_penalty" => c.comfort_penalty.to_string(),
            "eval_days" => c.eval_days.to_string(),
            _ => String::new(),
        }
    }

    /// Applies `key = value` lines. `#` starts a comment. A `preset` line is
    /// applied first wherever it appears.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("{origin}:{}: expected `key = value`", i + 1))?;
            pairs.push((i + 1, k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        pairs.sort_by_key(|(_, k, _)| k != "preset");
        for (line, k, v) in pairs {
            self.set(&k, &v).with_context(|| format!("{origin}:{line}"))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies `HVAC_<KEY>` variables from `vars`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        let mut found: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_ascii_lowercase(), v)))
            .filter(|(k, _)| KEYS.contains(&k.as_str()))
            .collect();
        found.sort_by(|a, b| (a.0 != "preset", &a.0).cmp(&(b.0 != "preset", &b.0)));
        for (k, v) in found {
            self.set(&k, &v).with_context(|| format!("environment {ENV_PREFIX}{}", k.to_ascii_uppercase()))?;
        }
        Ok(())
    }

    /// Effective configuration in the file format.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        KEYS.iter().map(|k| (k.to_string(), serde_json::Value::String(self.get(k)))).collect::<serde_json::Map<_, _>>().into()
    }
}
