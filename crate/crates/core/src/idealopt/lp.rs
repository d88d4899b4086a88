use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sparse (variable, coefficient) pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn satisfied(&self, x: &[f64], tol: f64) -> bool {
        let v = self.activity(x);
        match self.sense {
            Sense::Le => v <= self.rhs + tol,
            Sense::Ge => v >= self.rhs - tol,
            Sense::Eq => (v - self.rhs).abs() <= tol,
        }
    }
}

/// min c·x subject to rows and bounds; `integer` marks variables that
/// branch-and-bound must make integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub names: Vec<String>,
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

impl Problem {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            objective: Vec::new(),
            rows: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            integer: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64, integer: bool) -> usize {
        self.names.push(name.into());
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(integer);
        self.names.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Rows, bounds and integrality all hold within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n_vars()
            && (0..self.n_vars()).all(|j| {
                x[j] >= self.lower[j] - tol
                    && x[j] <= self.upper[j] + tol
                    && (!self.integer[j] || (x[j] - x[j].round()).abs() <= tol)
            })
            && self.rows.iter().all(|r| r.satisfied(x, tol))
    }
}

impl Default for Problem {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    /// m rows of `cols + 1` entries; the last is the right-hand side.
    a: Vec<f64>,
    m: usize,
    cols: usize,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn w(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.w() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.w() + self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.w();
        let p = self.a[r * w + c];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (x, y) in obj.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimizes the objective row `obj` (reduced costs, last entry = -value)
    /// over columns allowed by `allowed`.
    fn run(&mut self, obj: &mut [f64], allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        let mut degenerate = 0usize;
        let max_pivots = 50 * (self.m + self.cols) + 1000;
        loop {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for j in 0..self.cols {
                if !allowed(j) {
                    continue;
                }
                let d = obj[j];
                if bland {
                    if d < -PIVOT_TOL {
                        enter = Some(j);
                        break;
                    }
                } else if d < best {
                    best = d;
                    enter = Some(j);
                }
            }
            let Some(c) = enter else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Ok(false) };
            degenerate = if ratio.abs() < 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(r, c, obj);
            if self.pivots > max_pivots {
                return Err(Error::Undefined("simplex pivot limit reached"));
            }
        }
    }
}

/// Two-phase dense tableau simplex on the continuous relaxation. `lower` and
/// `upper` override the problem's bounds (branch-and-bound uses this).
pub fn solve_lp_bounded(p: &Problem, lower: &[f64], upper: &[f64]) -> Result<LpSolution> {
    let n = p.n_vars();
    for j in 0..n {
        if !lower[j].is_finite() {
            return Err(Error::InvalidParam {
                name: "lower bound",
                reason: format!("variable {} needs a finite lower bound", p.names[j]),
            });
        }
        if upper[j] < lower[j] - FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![],
                objective: f64::INFINITY,
                pivots: 0,
            });
        }
    }
    // rows in x' = x - lower, with non-negative right-hand sides
    let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    for r in &p.rows {
        let shift: f64 = r.coeffs.iter().map(|&(j, a)| a * lower[j]).sum();
        rows.push((r.coeffs.clone(), r.sense, r.rhs - shift));
    }
    for j in 0..n {
        if upper[j].is_finite() {
            rows.push((vec![(j, 1.0)], Sense::Le, (upper[j] - lower[j]).max(0.0)));
        }
    }
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|c| c.1 = -c.1);
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let art_start = n + n_slack;
    let w = cols + 1;
    let mut t = Tableau {
        a: vec![0.0; m * w],
        m,
        cols,
        basis: vec![0; m],
        pivots: 0,
    };
    let (mut s, mut a) = (n, art_start);
    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        for &(j, v) in coeffs {
            t.a[i * w + j] += v;
        }
        t.a[i * w + cols] = *rhs;
        match sense {
            Sense::Le => {
                t.a[i * w + s] = 1.0;
                t.basis[i] = s;
                s += 1;
            }
            Sense::Ge => {
                t.a[i * w + s] = -1.0;
                s += 1;
                t.a[i * w + a] = 1.0;
                t.basis[i] = a;
                a += 1;
            }
            Sense::Eq => {
                t.a[i * w + a] = 1.0;
                t.basis[i] = a;
                a += 1;
            }
        }
    }

    // phase 1: minimize the sum of artificials
    if n_art > 0 {
        let mut obj = vec![0.0; w];
        for j in art_start..cols {
            obj[j] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] >= art_start {
                for j in 0..w {
                    obj[j] -= t.at(i, j);
                }
            }
        }
        t.run(&mut obj, &|_| true)?;
        if -obj[cols] > FEAS_TOL * (1.0 + m as f64) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![],
                objective: f64::INFINITY,
                pivots: t.pivots,
            });
        }
        // drive remaining artificials out of the basis
        for i in 0..m {
            if t.basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| t.at(i, j).abs() > 1e-9) {
                    t.pivot(i, j, &mut obj);
                }
            }
        }
    }

    // phase 2
    let mut obj = vec![0.0; w];
    obj[..n].copy_from_slice(&p.objective);
    for i in 0..m {
        let b = t.basis[i];
        let cb = if b < n { p.objective[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..w {
                obj[j] -= cb * t.at(i, j);
            }
        }
    }
    let bounded = t.run(&mut obj, &|j| j < art_start)?;
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![],
            objective: f64::NEG_INFINITY,
            pivots: t.pivots,
        });
    }
    let mut x = lower.to_vec();
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] += t.rhs(i);
        }
    }
    for j in 0..n {
        x[j] = x[j].clamp(lower[j], upper[j].max(lower[j]));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: p.value(&x),
        x,
        pivots: t.pivots,
    })
}

/// LP relaxation with the problem's own bounds.
pub fn solve_lp(p: &Problem) -> Result<LpSolution> {
    solve_lp_bounded(p, &p.lower, &p.upper)
}
