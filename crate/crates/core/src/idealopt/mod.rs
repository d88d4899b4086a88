//! Ideal scheduler: a mixed-integer linear program over a piecewise-linear
//! surrogate of the plant, solved with a dense simplex inside best-first
//! branch-and-bound, plus recovery of the set-points that realize the plan.

mod bnb;
mod lp;
mod lpfile;
mod pwl;

pub use bnb::{solve_bnb, BnbOptions, Heuristic, MipSolution, MipStatus, NodeRecord};
pub use lp::{solve_lp, solve_lp_bounded, Constraint, LpSolution, LpStatus, Problem, Sense, FEAS_TOL};
pub use lpfile::{read_problem, write_problem};
pub use pwl::{
    build_instance, build_pwl, fill_heuristic, recover_setpoints, solve_ideal, IdealPlan, IdealSpec, Layout,
    PwlModel, Recovered, RECONSTRUCTION_TOL,
};

#[cfg(test)]
mod tests;
