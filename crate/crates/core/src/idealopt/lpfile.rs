use std::fmt::Write as _;

use super::lp::{Constraint, Problem, Sense};
use crate::error::{Error, Result};

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}

fn parse_f(s: &str, line: usize) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad number {s:?}"),
        }),
    }
}

/// Plain-text dump of a problem, one variable or row per line.
///
/// ```text
/// var <name> <cost> <lower> <upper> <int|cont>
/// row <name> <le|ge|eq> <rhs> <j>:<coef> ...
/// ```
pub fn write_problem(p: &Problem) -> String {
    let mut s = String::from("# hvac-milp v1\n");
    for j in 0..p.n_vars() {
        let _ = writeln!(
            s,
            "var {} {:e} {} {} {}",
            p.names[j],
            p.objective[j],
            fmt_bound(p.lower[j]),
            fmt_bound(p.upper[j]),
            if p.integer[j] { "int" } else { "cont" }
        );
    }
    for r in &p.rows {
        let sense = match r.sense {
            Sense::Le => "le",
            Sense::Ge => "ge",
            Sense::Eq => "eq",
        };
        let _ = write!(s, "row {} {} {:e}", r.name, sense, r.rhs);
        for &(j, a) in &r.coeffs {
            let _ = write!(s, " {j}:{a:e}");
        }
        s.push('\n');
    }
    s
}

pub fn read_problem(text: &str) -> Result<Problem> {
    let mut p = Problem::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse { line: ln, msg: msg.into() };
        match tok[0] {
            "var" => {
                if tok.len() != 6 {
                    return Err(bad("var needs 5 fields"));
                }
                let integer = match tok[5] {
                    "int" => true,
                    "cont" => false,
                    _ => return Err(bad("expected int or cont")),
                };
                p.add_var(tok[1], parse_f(tok[2], ln)?, parse_f(tok[3], ln)?, parse_f(tok[4], ln)?, integer);
            }
            "row" => {
                if tok.len() < 4 {
                    return Err(bad("row needs name, sense and rhs"));
                }
                let sense = match tok[2] {
                    "le" => Sense::Le,
                    "ge" => Sense::Ge,
                    "eq" => Sense::Eq,
                    _ => return Err(bad("unknown sense")),
                };
                let mut coeffs = Vec::new();
                for t in &tok[4..] {
                    let (j, a) = t.split_once(':').ok_or_else(|| bad("expected j:coef"))?;
                    let j: usize = j.parse().map_err(|_| bad("bad column index"))?;
                    if j >= p.n_vars() {
                        return Err(bad("column index out of range"));
                    }
                    coeffs.push((j, parse_f(a, ln)?));
                }
                p.rows.push(Constraint {
                    name: tok[1].into(),
                    coeffs,
                    sense,
                    rhs: parse_f(tok[3], ln)?,
                });
            }
            other => return Err(bad(&format!("unknown record {other:?}"))),
        }
    }
    Ok(p)
}
