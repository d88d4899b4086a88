use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::datagen::{gen_day_inputs, GenConfig};
use crate::metrics::energy_cost;
use crate::plant::{simulate_day, simulate_power, PlantParams, PlantState};
use crate::profile::HOURS;

fn textbook() -> Problem {
    // max x + y st x + 2y <= 3, 2x + y <= 3
    let mut p = Problem::new();
    let x = p.add_var("x", -1.0, 0.0, f64::INFINITY, false);
    let y = p.add_var("y", -1.0, 0.0, f64::INFINITY, false);
    p.add_row("a", vec![(x, 1.0), (y, 2.0)], Sense::Le, 3.0);
    p.add_row("b", vec![(x, 2.0), (y, 1.0)], Sense::Le, 3.0);
    p
}

#[test]
fn textbook_lp() {
    let s = solve_lp(&textbook()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 1.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
    assert!((s.objective + 2.0).abs() < 1e-9);
}

#[test]
fn equality_and_ge_rows() {
    // min 2x + 3y st x + y = 4, x >= 1, y >= 1.5, x <= 2
    let mut p = Problem::new();
    let x = p.add_var("x", 2.0, 1.0, 2.0, false);
    let y = p.add_var("y", 3.0, 0.0, f64::INFINITY, false);
    p.add_row("sum", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
    p.add_row("y_min", vec![(y, 1.0)], Sense::Ge, 1.5);
    let s = solve_lp(&p).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 2.0).abs() < 1e-9);
    assert!((s.objective - 10.0).abs() < 1e-9);
}

#[test]
fn infeasible_and_unbounded() {
    let mut p = Problem::new();
    let x = p.add_var("x", 1.0, 0.0, f64::INFINITY, false);
    p.add_row("lo", vec![(x, 1.0)], Sense::Ge, 2.0);
    p.add_row("hi", vec![(x, 1.0)], Sense::Le, 1.0);
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);

    let mut q = Problem::new();
    let x = q.add_var("x", -1.0, 0.0, f64::INFINITY, false);
    let y = q.add_var("y", 0.0, 0.0, f64::INFINITY, false);
    q.add_row("r", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
    assert_eq!(solve_lp(&q).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn negative_lower_bounds_shift() {
    let mut p = Problem::new();
    let x = p.add_var("x", 1.0, -3.0, 5.0, false);
    let y = p.add_var("y", 1.0, -2.0, 5.0, false);
    p.add_row("r", vec![(x, 1.0), (y, 1.0)], Sense::Ge, -4.0);
    let s = solve_lp(&p).unwrap();
    assert!((s.objective + 4.0).abs() < 1e-9);
    assert!(p.is_feasible(&s.x, 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Optimum of a random bounded 2-variable LP matches a fine grid search
    /// to within the grid resolution.
    #[test]
    fn lp_matches_grid(c in prop::array::uniform2(-5.0f64..5.0),
                       a in prop::array::uniform4(-3.0f64..3.0),
                       b in prop::array::uniform2(0.5f64..4.0)) {
        let mut p = Problem::new();
        p.add_var("x", c[0], 0.0, 2.0, false);
        p.add_var("y", c[1], 0.0, 2.0, false);
        p.add_row("r0", vec![(0, a[0]), (1, a[1])], Sense::Le, b[0]);
        p.add_row("r1", vec![(0, a[2]), (1, a[3])], Sense::Le, b[1]);
        let s = solve_lp(&p).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        prop_assert!(p.is_feasible(&s.x, 1e-7));
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let x = [2.0 * i as f64 / n as f64, 2.0 * j as f64 / n as f64];
                if p.is_feasible(&x, 0.0) {
                    best = best.min(p.value(&x));
                }
            }
        }
        prop_assert!(s.objective <= best + 1e-9);
        prop_assert!(best - s.objective <= 10.0 * 2.0 / n as f64 * (c[0].abs() + c[1].abs()) + 1e-9);
    }
}

fn random_spec(rng: &mut ChaCha8Rng, hard: bool) -> IdealSpec {
    let nt = rng.gen_range(1..=4);
    let ns = rng.gen_range(1..=2);
    let w = rng.gen_range(5.0..15.0);
    let mut f = vec![vec![vec![0.0; ns]; nt]; nt];
    for t in 0..nt {
        for tau in 0..=t {
            let decay = 0.5f64.powi((t - tau) as i32);
            for n in 0..ns {
                f[t][tau][n] = -rng.gen_range(0.05..0.2) * decay / (1.0 + n as f64);
            }
        }
    }
    let t_free: Vec<f64> = (0..nt).map(|_| rng.gen_range(23.0..27.0)).collect();
    IdealSpec {
        price: (0..nt).map(|_| rng.gen_range(-1.0..12.0)).collect(),
        model: PwlModel {
            f,
            t_free,
            block_caps: vec![w; ns],
            n_blocks: ns,
        },
        comfort: (0..nt)
            .map(|_| rng.gen_bool(0.7).then(|| (22.0, rng.gen_range(23.0..24.5))))
            .collect(),
        r_down: -rng.gen_range(5.0..20.0),
        r_up: rng.gen_range(5.0..20.0),
        comfort_penalty: (!hard).then_some(1000.0),
    }
}

/// Fixes every binary and solves the remaining LP.
fn brute_force(p: &Problem) -> Option<f64> {
    let ints: Vec<usize> = (0..p.n_vars()).filter(|&j| p.integer[j]).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << ints.len()) {
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        for (k, &j) in ints.iter().enumerate() {
            let v = ((mask >> k) & 1) as f64;
            lo[j] = v;
            hi[j] = v;
        }
        let s = solve_lp_bounded(p, &lo, &hi).unwrap();
        if s.status == LpStatus::Optimal {
            best = Some(best.map_or(s.objective, |b: f64| b.min(s.objective)));
        }
    }
    best
}

#[test]
fn bnb_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut feasible = 0;
    for i in 0..50 {
        let spec = random_spec(&mut rng, i % 2 == 0);
        let (p, lay) = build_instance(&spec);
        let h = fill_heuristic(&p, &lay, &spec.model.block_caps);
        let sol = solve_bnb(&p, &BnbOptions::default(), Some(&h)).unwrap();
        match brute_force(&p) {
            None => assert_eq!(sol.status, MipStatus::Infeasible, "instance {i}"),
            Some(best) => {
                feasible += 1;
                assert_eq!(sol.status, MipStatus::Optimal, "instance {i}");
                assert!((sol.objective - best).abs() < 1e-9 * (1.0 + best.abs()), "instance {i}: {} vs {best}", sol.objective);
                assert!(p.is_feasible(&sol.x, 1e-7));
                assert!(sol.root_bound <= sol.objective + 1e-9);
                for r in &sol.log {
                    assert!(r.bound >= r.parent_bound - 1e-9, "child bound below parent");
                }
            }
        }
    }
    assert!(feasible >= 25);
}

#[test]
fn blocks_fill_in_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let mut spec = random_spec(&mut rng, false);
        if spec.model.n_blocks < 2 {
            continue;
        }
        // make the second block look more effective so the LP wants it first
        for row in spec.model.f.iter_mut() {
            for col in row.iter_mut() {
                col[1] = 3.0 * col[0];
            }
        }
        let (p, lay) = build_instance(&spec);
        let sol = solve_bnb(&p, &BnbOptions::default(), None).unwrap();
        for t in 0..lay.horizon {
            if sol.x[lay.d(t, 1)] > 1e-7 {
                assert!(sol.x[lay.d(t, 0)] >= spec.model.block_caps[0] - 1e-6);
            }
        }
    }
}

#[test]
fn integral_relaxation_needs_no_branching() {
    let mut p = Problem::new();
    let a = p.add_var("a", -1.0, 0.0, 1.0, true);
    let b = p.add_var("b", -2.0, 0.0, 1.0, true);
    p.add_row("r", vec![(a, 1.0), (b, 1.0)], Sense::Le, 2.0);
    let sol = solve_bnb(&p, &BnbOptions::default(), None).unwrap();
    assert_eq!(sol.branched, 0);
    assert!((sol.objective + 3.0).abs() < 1e-12);
}

#[test]
fn knapsack_against_enumeration() {
    let w = [3.0, 4.0, 5.0, 6.0, 2.5];
    let v = [4.0, 5.0, 6.5, 7.0, 3.0];
    let mut p = Problem::new();
    for j in 0..5 {
        p.add_var(format!("x{j}"), -v[j], 0.0, 1.0, true);
    }
    p.add_row("cap", (0..5).map(|j| (j, w[j])).collect(), Sense::Le, 10.0);
    let sol = solve_bnb(&p, &BnbOptions::default(), None).unwrap();
    let best = brute_force(&p).unwrap();
    assert!((sol.objective - best).abs() < 1e-9);
    assert!(sol.root_bound <= best + 1e-9);
    assert!(sol.branched > 0);
}

#[test]
fn zero_width_block_is_degenerate_not_fatal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut spec = random_spec(&mut rng, false);
    spec.model.block_caps = vec![0.0; spec.model.n_blocks];
    let (p, _) = build_instance(&spec);
    let sol = solve_bnb(&p, &BnbOptions::default(), None).unwrap();
    assert_eq!(sol.status, MipStatus::Optimal);
    assert!(p.is_feasible(&sol.x, 1e-7));
}

#[test]
fn problem_text_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = random_spec(&mut rng, false);
    let (p, _) = build_instance(&spec);
    let q = read_problem(&write_problem(&p)).unwrap();
    assert_eq!(p, q);
    assert!(matches!(read_problem("row r le 1 7:1"), Err(crate::Error::Parse { line: 1, .. })));
}

fn day() -> (PlantState, crate::profile::DayInputs, PlantParams) {
    let cfg = GenConfig::default();
    (PlantState::uniform(23.0), gen_day_inputs(4, &cfg), PlantParams::default())
}

#[test]
fn recover_round_trip() {
    let (init, inputs, plant) = day();
    let sp = std::array::from_fn(|h| if (8..18).contains(&h) { 22.5 } else { 24.0 });
    let (prof, _) = simulate_day(&init, &inputs, &sp, &plant).unwrap();
    let rec = recover_setpoints(&prof.p, &init, &inputs, &plant).unwrap();
    let rms = (rec.residual.iter().map(|r| r * r).sum::<f64>() / HOURS as f64).sqrt();
    assert!(rms < 1.0, "rms {rms}");
}

#[test]
fn recover_zero_and_saturated() {
    let (init, inputs, plant) = day();
    let rec = recover_setpoints(&[0.0; HOURS], &init, &inputs, &plant).unwrap();
    assert!(rec.power.iter().all(|&p| p == 0.0));
    let rec = recover_setpoints(&[plant.heat_pump.p_max + 100.0; HOURS], &init, &inputs, &plant).unwrap();
    assert!(rec.setpoints.iter().all(|&u| u == 15.0));
}

#[test]
fn ideal_beats_rule_on_a_typical_day() {
    let (init, inputs, plant) = day();
    let comfort: Vec<_> = (0..HOURS).map(|h| (7..=19).contains(&h).then_some((22.0, 24.0))).collect();
    let plan = solve_ideal(&init, &inputs, &plant, 4, &comfort, Some(1000.0), &BnbOptions::default()).unwrap();
    let run = simulate_power(&init, &inputs.env, &plan.power, &plant).unwrap();
    for h in 7..=19 {
        assert!((plan.t_linear[h] - run.t_indoor[h]).abs() < 0.1);
        assert!(run.t_indoor[h] < 24.1 && run.t_indoor[h] > 21.9, "hour {h}: {}", run.t_indoor[h]);
    }
    let (rule, _) = simulate_day(&init, &inputs, &[23.0; HOURS], &plant).unwrap();
    assert!(energy_cost(&inputs.price, &plan.power) <= energy_cost(&inputs.price, &rule.p));
}
