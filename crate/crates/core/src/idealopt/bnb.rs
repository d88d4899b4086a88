use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::lp::{solve_lp_bounded, LpStatus, Problem, FEAS_TOL};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnbOptions {
    /// Absolute optimality gap.
    pub gap_abs: f64,
    pub max_nodes: usize,
    /// Tolerance for treating a value as integral.
    pub int_tol: f64,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            gap_abs: 1e-6,
            max_nodes: 20_000,
            int_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MipStatus {
    Optimal,
    /// Node budget exhausted; the incumbent is returned with its gap.
    NodeLimit,
    Infeasible,
}

/// LP bound of one explored node next to its parent's bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub depth: usize,
    pub bound: f64,
    pub parent_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub status: MipStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub root_bound: f64,
    /// Best remaining bound when the search stopped.
    pub gap: f64,
    pub nodes: usize,
    /// Nodes that needed a branching decision.
    pub branched: usize,
    pub log: Vec<NodeRecord>,
}

struct Node {
    bound: f64,
    depth: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Repairs an LP point into an integer-feasible point, if it can.
pub type Heuristic<'a> = &'a dyn Fn(&[f64]) -> Option<Vec<f64>>;

fn most_fractional(p: &Problem, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for j in 0..p.n_vars() {
        if p.integer[j] {
            let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
            if frac > tol && best.map_or(true, |(_, f)| frac > f + 1e-12) {
                best = Some((j, frac));
            }
        }
    }
    best.map(|(j, _)| j)
}

/// Best-first branch-and-bound with LP bounds.
pub fn solve_bnb(p: &Problem, opts: &BnbOptions, heuristic: Option<Heuristic<'_>>) -> Result<MipSolution> {
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut log = Vec::new();
    let mut nodes = 0usize;
    let mut branched = 0usize;
    let mut seq = 0usize;
    let mut heap = BinaryHeap::new();

    let offer = |x: Vec<f64>, incumbent: &mut Option<(f64, Vec<f64>)>| {
        if p.is_feasible(&x, FEAS_TOL.max(opts.int_tol)) {
            let mut x = x;
            for j in 0..p.n_vars() {
                if p.integer[j] {
                    x[j] = x[j].round();
                }
            }
            let v = p.value(&x);
            if incumbent.as_ref().map_or(true, |(b, _)| v < *b) {
                *incumbent = Some((v, x));
            }
        }
    };

    let root = solve_lp_bounded(p, &p.lower, &p.upper)?;
    nodes += 1;
    if root.status != LpStatus::Optimal {
        return Ok(MipSolution {
            status: MipStatus::Infeasible,
            x: vec![],
            objective: f64::INFINITY,
            root_bound: root.objective,
            gap: f64::INFINITY,
            nodes,
            branched,
            log,
        });
    }
    let root_bound = root.objective;
    log.push(NodeRecord {
        depth: 0,
        bound: root_bound,
        parent_bound: f64::NEG_INFINITY,
    });
    heap.push(Node {
        bound: root_bound,
        depth: 0,
        lower: p.lower.clone(),
        upper: p.upper.clone(),
        x: root.x,
        seq,
    });

    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - opts.gap_abs {
                // best-first: every remaining node is at least as bad
                heap.clear();
                break;
            }
        }
        let Some(j) = most_fractional(p, &node.x, opts.int_tol) else {
            offer(node.x.clone(), &mut incumbent);
            continue;
        };
        if let Some(h) = heuristic {
            if let Some(x) = h(&node.x) {
                offer(x, &mut incumbent);
                if let Some((best, _)) = &incumbent {
                    if node.bound >= best - opts.gap_abs {
                        continue;
                    }
                }
            }
        }
        if nodes >= opts.max_nodes {
            hit_limit = true;
            heap.push(node);
            break;
        }
        branched += 1;
        let v = node.x[j];
        for down in [true, false] {
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            if down {
                upper[j] = v.floor();
            } else {
                lower[j] = v.ceil();
            }
            let sol = solve_lp_bounded(p, &lower, &upper)?;
            nodes += 1;
            if sol.status != LpStatus::Optimal {
                continue;
            }
            log.push(NodeRecord {
                depth: node.depth + 1,
                bound: sol.objective,
                parent_bound: node.bound,
            });
            if let Some((best, _)) = &incumbent {
                if sol.objective >= best - opts.gap_abs {
                    continue;
                }
            }
            if most_fractional(p, &sol.x, opts.int_tol).is_none() {
                offer(sol.x, &mut incumbent);
                continue;
            }
            seq += 1;
            heap.push(Node {
                bound: sol.objective,
                depth: node.depth + 1,
                lower,
                upper,
                x: sol.x,
                seq,
            });
        }
    }
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match incumbent {
        None => Ok(MipSolution {
            status: if hit_limit { MipStatus::NodeLimit } else { MipStatus::Infeasible },
            x: vec![],
            objective: f64::INFINITY,
            root_bound,
            gap: f64::INFINITY,
            nodes,
            branched,
            log,
        }),
        Some((obj, x)) => {
            let gap = if hit_limit { (obj - open_bound.min(obj)).max(0.0) } else { 0.0 };
            if hit_limit {
                log::warn!("branch-and-bound node limit reached with gap {gap:.3e}");
            }
            Ok(MipSolution {
                status: if hit_limit { MipStatus::NodeLimit } else { MipStatus::Optimal },
                x,
                objective: obj,
                root_bound,
                gap,
                nodes,
                branched,
                log,
            })
        }
    }
}
