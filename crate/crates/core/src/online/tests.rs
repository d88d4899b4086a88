use super::*;

fn tiny(seed: u64) -> OnlineConfig {
    let mut cfg = OnlineConfig::desk(seed);
    cfg.n_days = 2;
    cfg.gen.initial_days = 8;
    cfg.composite.train.epochs = 20;
    cfg.warm.epochs = 3;
    cfg.schedule.epochs = 10;
    cfg.eval_days = 2;
    cfg
}

#[test]
fn store_grows_by_a_day_per_step() {
    let run = online_loop(tiny(1)).unwrap();
    assert_eq!(run.store.n_rows(), (8 + 2) * HOURS);
    assert_eq!(run.curve.records.len(), 2);
    let n = run.store.n_rows();
    let train = run.store.rows(Split::Train).len();
    assert!((train as f64 - 0.8 * n as f64).abs() <= 1.0);
    for r in &run.curve.records {
        assert!(r.cost_proposed.is_finite() && r.cost_rule > 0.0);
        assert!(r.v_tc >= 0.0);
    }
}

#[test]
fn loop_is_deterministic() {
    let a = online_loop(tiny(3)).unwrap();
    let b = online_loop(tiny(3)).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.model, b.model);
}

#[test]
fn failures_name_day_and_stage() {
    let mut cfg = tiny(2);
    cfg.warm.lr = f64::NAN;
    let err = online_loop(cfg).unwrap_err();
    assert!(matches!(err, Error::Online { day: 1, stage: "retrain", .. }), "{err}");
}

#[test]
fn update_period_must_be_daily() {
    let mut cfg = tiny(0);
    cfg.update_period = 12;
    assert!(OnlineRun::start(cfg).is_err());
}

#[test]
fn curve_csv_header_and_rows() {
    let curve = LearningCurve {
        records: vec![DayRecord {
            day: 1,
            calendar_day: 9,
            nrmse: NrmseTriple {
                p: 0.1,
                q: f64::NAN,
                t_indoor: 0.01,
            },
            cost_proposed: 5.0,
            cost_ideal: 4.0,
            cost_rule: 8.0,
            r_cr: 37.5,
            v_tc: 0.0,
            v_tc_ideal: 0.0,
            v_tc_rule: 0.0,
            setpoints: [23.0; HOURS],
            j: 1.0,
            margin: 0.2,
            t_pred_rmse: 0.1,
        }],
    };
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CURVE_HEADER.join(","));
    assert_eq!(lines.next().unwrap(), "1,0.1,NaN,0.01,5,4,8,37.5,0");
    assert_eq!(curve.quartile_means(|r| r.cost_rule)[3], 8.0);
}

#[test]
fn eval_suite_is_varied() {
    let cases = eval_suite(&GenConfig::default(), &PlantParams::default(), 5).unwrap();
    let distinct: std::collections::BTreeSet<String> =
        cases.iter().map(|c| format!("{:?}", c.day.t_set)).collect();
    assert_eq!(distinct.len(), 5);
}
