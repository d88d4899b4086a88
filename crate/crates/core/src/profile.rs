//! Hourly day bundles and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scheduling horizon in hours.
pub const HOURS: usize = 24;

pub type Hourly = [f64; HOURS];

/// Exogenous conditions for one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Outdoor (condenser-side) air temperature, °C.
    pub t_out: f64,
    /// Evaporator-side air temperature, °C.
    pub t_evap: f64,
    /// Adjacent room temperature, °C.
    pub t_adj: f64,
    /// Internal thermal load, kW.
    pub q_internal: f64,
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("t_out", self.t_out),
            ("t_evap", self.t_evap),
            ("t_adj", self.t_adj),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(what));
            }
            if !(-20.0..=50.0).contains(&v) {
                return Err(Error::OutOfRange {
                    what,
                    value: v,
                    lo: -20.0,
                    hi: 50.0,
                });
            }
        }
        if !self.q_internal.is_finite() {
            return Err(Error::NonFinite("q_internal"));
        }
        if self.q_internal < 0.0 {
            return Err(Error::OutOfRange {
                what: "q_internal",
                value: self.q_internal,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(())
    }
}

/// Exogenous inputs of one day: price forecast and environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayInputs {
    pub day: u32,
    /// Retail price, ¢/kWh. May be negative.
    pub price: Hourly,
    pub env: [Environment; HOURS],
}

/// Everything recorded for one simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayProfile {
    pub day: u32,
    pub price: Hourly,
    pub env: [Environment; HOURS],
    pub t_set: Hourly,
    /// Hourly average electrical power, kW.
    pub p: Hourly,
    /// Hourly average cooling rate, kW thermal.
    pub q: Hourly,
    /// Indoor temperature at the end of each hour, °C.
    pub t_indoor: Hourly,
}

impl DayProfile {
    pub fn inputs(&self) -> DayInputs {
        DayInputs {
            day: self.day,
            price: self.price,
            env: self.env,
        }
    }

    pub fn t_out(&self) -> Hourly {
        std::array::from_fn(|h| self.env[h].t_out)
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "day",
    "hour",
    "price_c_per_kwh",
    "t_out",
    "t_evap",
    "t_adj",
    "q_int_kw",
    "t_set",
    "p_kw",
    "q_kw",
    "t_indoor",
];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    day: u32,
    hour: usize,
    price_c_per_kwh: f64,
    t_out: f64,
    t_evap: f64,
    t_adj: f64,
    q_int_kw: f64,
    t_set: f64,
    p_kw: f64,
    q_kw: f64,
    t_indoor: f64,
}

/// Writes days as hourly rows with the fixed header.
pub fn write_csv<W: Write>(out: W, days: &[DayProfile]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for d in days {
        for h in 0..HOURS {
            let e = &d.env[h];
            w.serialize(CsvRow {
                day: d.day,
                hour: h,
                price_c_per_kwh: d.price[h],
                t_out: e.t_out,
                t_evap: e.t_evap,
                t_adj: e.t_adj,
                q_int_kw: e.q_internal,
                t_set: d.t_set[h],
                p_kw: d.p[h],
                q_kw: d.q[h],
                t_indoor: d.t_indoor[h],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads days back. Rows must be grouped by day with hours 0..23 in order.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<DayProfile>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut days = Vec::new();
    let mut cur: Option<DayProfile> = None;
    for (i, rec) in r.deserialize::<CsvRow>().enumerate() {
        let row = rec?;
        let line = i + 2;
        if row.hour >= HOURS {
            return Err(Error::Parse {
                line,
                msg: format!("hour {} out of range", row.hour),
            });
        }
        if row.hour == 0 {
            if let Some(d) = cur.take() {
                days.push(d);
            }
            cur = Some(empty_day(row.day));
        }
        let d = cur.as_mut().ok_or_else(|| Error::Parse {
            line,
            msg: "day does not start at hour 0".into(),
        })?;
        if d.day != row.day {
            return Err(Error::Parse {
                line,
                msg: format!("day {} interleaved with day {}", row.day, d.day),
            });
        }
        let h = row.hour;
        d.price[h] = row.price_c_per_kwh;
        d.env[h] = Environment {
            t_out: row.t_out,
            t_evap: row.t_evap,
            t_adj: row.t_adj,
            q_internal: row.q_int_kw,
        };
        d.t_set[h] = row.t_set;
        d.p[h] = row.p_kw;
        d.q[h] = row.q_kw;
        d.t_indoor[h] = row.t_indoor;
        if h == HOURS - 1 {
            days.push(cur.take().expect("current day"));
        }
    }
    if cur.is_some() {
        return Err(Error::Parse {
            line: 0,
            msg: "trailing partial day".into(),
        });
    }
    Ok(days)
}

fn empty_day(day: u32) -> DayProfile {
    let env = Environment {
        t_out: 0.0,
        t_evap: 0.0,
        t_adj: 0.0,
        q_internal: 0.0,
    };
    DayProfile {
        day,
        price: [0.0; HOURS],
        env: [env; HOURS],
        t_set: [0.0; HOURS],
        p: [0.0; HOURS],
        q: [0.0; HOURS],
        t_indoor: [0.0; HOURS],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_day(day: u32) -> DayProfile {
        let mut d = empty_day(day);
        for h in 0..HOURS {
            let x = h as f64;
            d.price[h] = 2.5 + 0.1 * x - if h == 3 { 4.0 } else { 0.0 };
            d.env[h] = Environment {
                t_out: 25.0 + 0.3 * x,
                t_evap: 12.0,
                t_adj: 25.0,
                q_internal: 3.0 + x / 7.0,
            };
            d.t_set[h] = 23.0;
            d.p[h] = x / 3.0;
            d.q[h] = x;
            d.t_indoor[h] = 22.0 + x / 11.0;
        }
        d
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let days = vec![sample_day(4), sample_day(5)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &days).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("day,hour,price_c_per_kwh,t_out,t_evap,t_adj,q_int_kw,t_set,p_kw,q_kw,t_indoor\n"));
        assert_eq!(text.lines().count(), 1 + 48);
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back, days);
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let bad = "day,hour,price\n1,0,3.0\n";
        assert!(matches!(read_csv(bad.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_rejects_partial_day() {
        let days = vec![sample_day(1)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &days).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(read_csv(truncated.as_bytes()).is_err());
    }

    #[test]
    fn environment_range_checked() {
        let mut e = sample_day(0).env[0];
        assert!(e.validate().is_ok());
        e.t_out = 55.0;
        assert!(e.validate().is_err());
        e.t_out = 30.0;
        e.q_internal = -1.0;
        assert!(e.validate().is_err());
    }
}
