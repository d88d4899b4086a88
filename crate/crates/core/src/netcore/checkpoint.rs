use std::io::{BufRead, BufReader, Read, Write};

use super::{NetworkModel, NetworkSpec, Normalizer};
use crate::error::{Error, Result};

const MAGIC: &str = "hvac-lstm-checkpoint v1";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Writes a line-oriented text dump. `f64` values use the shortest
/// representation that parses back to the same bits.
pub fn save<W: Write>(model: &NetworkModel, mut out: W) -> Result<()> {
    let s = &model.spec;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "n_features {}", s.n_features)?;
    writeln!(out, "n_layers {}", s.n_layers)?;
    writeln!(out, "n_hidden {}", s.n_hidden)?;
    writeln!(out, "seq_len {}", s.seq_len)?;
    writeln!(out, "n_outputs {}", s.n_outputs)?;
    for (tag, n) in [("in", &model.in_norm), ("out", &model.out_norm)] {
        writeln!(out, "{tag}_min {}", join(&n.min))?;
        writeln!(out, "{tag}_max {}", join(&n.max))?;
        let flags: Vec<&str> = n.degenerate.iter().map(|&d| if d { "1" } else { "0" }).collect();
        writeln!(out, "{tag}_degenerate {}", flags.join(" "))?;
    }
    writeln!(out, "params {}", join(&model.params))?;
    Ok(())
}

pub fn save_to_string(model: &NetworkModel) -> String {
    let mut buf = Vec::new();
    save(model, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

pub fn load<R: Read>(input: R) -> Result<NetworkModel> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let mut next = |key: &str| -> Result<(usize, String)> {
        let (i, line) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("unexpected end of checkpoint, expected `{key}`"),
        })?;
        let line = line?;
        let rest = if key.is_empty() {
            line
        } else {
            let (k, rest) = line.split_once(' ').unwrap_or((line.as_str(), ""));
            if k != key {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `{key}`, found `{k}`"),
                });
            }
            rest.to_string()
        };
        Ok((i + 1, rest))
    };
    let (_, magic) = next("")?;
    if magic.trim() != MAGIC {
        return Err(Error::Parse {
            line: 1,
            msg: format!("not a checkpoint: `{magic}`"),
        });
    }
    let mut int = |key: &str| -> Result<usize> {
        let (line, v) = next(key)?;
        v.trim().parse().map_err(|e| Error::Parse {
            line,
            msg: format!("{key}: {e}"),
        })
    };
    let spec = NetworkSpec {
        n_features: int("n_features")?,
        n_layers: int("n_layers")?,
        n_hidden: int("n_hidden")?,
        seq_len: int("seq_len")?,
        n_outputs: int("n_outputs")?,
    };
    spec.validate()?;
    let mut floats = |key: &str, n: usize| -> Result<Vec<f64>> {
        let (line, v) = next(key)?;
        let vals = v
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line,
                msg: format!("{key}: {e}"),
            })?;
        if vals.len() != n {
            return Err(Error::Parse {
                line,
                msg: format!("{key}: expected {n} values, found {}", vals.len()),
            });
        }
        Ok(vals)
    };
    let mut norm = |tag: &str, n: usize| -> Result<Normalizer> {
        let min = floats(&format!("{tag}_min"), n)?;
        let max = floats(&format!("{tag}_max"), n)?;
        let degenerate = floats(&format!("{tag}_degenerate"), n)?.iter().map(|&v| v != 0.0).collect();
        Ok(Normalizer { min, max, degenerate })
    };
    let in_norm = norm("in", spec.n_features)?;
    let out_norm = norm("out", spec.n_outputs)?;
    let params = floats("params", spec.n_params())?;
    Ok(NetworkModel {
        spec,
        params,
        in_norm,
        out_norm,
    })
}
