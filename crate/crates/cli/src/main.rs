mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hvac_core::composite::{load_composite, save_composite, CompositeModel, HistoryBuffer};
use hvac_core::datagen::{gen_day_inputs, gen_initial_dataset};
use hvac_core::idealopt::{recover_setpoints, solve_ideal};
use hvac_core::metrics::{comfort_violation, cost_reduction_rate, energy_cost};
use hvac_core::online::{
    ablation_study, bootstrap, eval_suite, model_margin, online_loop_with, DataStore, OnlineRun, RULE_SETPOINT,
};
use hvac_core::plant::{simulate_day, PlantState};
use hvac_core::profile::{read_csv, write_csv, DayInputs, DayProfile, HOURS};
use hvac_core::scheduler::{optimize, write_schedule_csv, ScheduleProblem};

use config::Settings;
use svg::{Chart, Series};

#[derive(Parser)]
#[command(name = "hvac", version, about = "Learned-model HVAC set-point scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run directory for every output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the rule-based initial dataset.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        price_kind: Option<String>,
    },
    /// Bootstrap-train the composite model on a store.
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory written by `gen`.
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        topology: Option<String>,
    },
    /// Optimize one day's set-points with a trained model.
    Schedule {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Calendar day; defaults to the day after the store ends.
        #[arg(long)]
        day: Option<u32>,
        #[arg(long)]
        objective: Option<String>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Run the online schedule, execute, collect and retrain loop.
    Online {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        warm_epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Start from this store instead of generating one.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Start from this model instead of bootstrapping.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Save a model checkpoint every K days.
        #[arg(long)]
        checkpoint_every: Option<usize>,
    },
    /// Rule-based or ideal schedule for one day, executed on the plant.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["rule", "ideal"])]
        kind: String,
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        day: Option<u32>,
    },
    /// Proposed, ideal and rule-based cases on the same days.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also compare the three network topologies.
        #[arg(long)]
        ablations: bool,
    },
}

fn settings(common: &Common, flags: &[(&str, Option<String>)]) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(p) = &common.config {
        s.apply_file(p)?;
    }
    s.apply_env(std::env::vars())?;
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    for kv in &common.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        s.set(k.trim(), v.trim())?;
    }
    s.cfg.validate()?;
    Ok(s)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest(out: &Path, command: &str, s: &Settings, extra: serde_json::Value) -> Result<()> {
    let manifest = serde_json::json!({
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": s.to_json(),
        "details": extra,
    });
    write(&out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    write(&out.join("config.txt"), s.render())
}

struct StoreDir {
    store: DataStore,
    state: PlantState,
}

fn save_store(dir: &Path, store: &DataStore, state: &PlantState) -> Result<()> {
    let mut days = vec![store.prelude().clone()];
    days.extend_from_slice(store.episodes());
    let f = fs::File::create(dir.join("store.csv")).context("creating store.csv")?;
    write_csv(f, &days)?;
    write(&dir.join("state.json"), serde_json::to_string_pretty(state)?)
}

fn load_store(dir: &Path, seed: u64) -> Result<StoreDir> {
    let path = dir.join("store.csv");
    let f = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let mut days = read_csv(f).with_context(|| format!("reading {}", path.display()))?;
    if days.len() < 2 {
        bail!("{} holds {} day(s); need a prelude and at least one episode", path.display(), days.len());
    }
    let prelude = days.remove(0);
    let spath = dir.join("state.json");
    let state: PlantState = serde_json::from_str(&fs::read_to_string(&spath).with_context(|| format!("reading {}", spath.display()))?)
        .with_context(|| format!("parsing {}", spath.display()))?;
    Ok(StoreDir {
        store: DataStore::new(prelude, days, seed),
        state,
    })
}

fn load_model(path: &Path) -> Result<CompositeModel> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_composite(f).with_context(|| format!("reading model {}", path.display()))
}

fn save_model(path: &Path, m: &CompositeModel) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    save_composite(m, std::io::BufWriter::new(f))?;
    Ok(())
}

fn day_table(path: &Path, d: &DayProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["hour", "price", "t_set", "p", "q", "t_indoor", "t_out"])?;
    for h in 0..HOURS {
        w.write_record([
            h.to_string(),
            d.price[h].to_string(),
            d.t_set[h].to_string(),
            d.p[h].to_string(),
            d.q[h].to_string(),
            d.t_indoor[h].to_string(),
            d.env[h].t_out.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn day_plots(out: &Path, d: &DayProfile, s: &Settings, title: &str) -> Result<()> {
    let sp = &s.cfg.schedule;
    let t = Chart {
        title: &format!("{title}: temperatures"),
        x_label: "hour",
        y_label: "°C",
        series: vec![
            Series { name: "T_set", values: &d.t_set },
            Series { name: "T_i", values: &d.t_indoor },
        ],
        band: Some((sp.t_min, sp.t_max)),
        log_y: false,
    };
    write(&out.join("temperature.svg"), t.render())?;
    let p = Chart {
        title: &format!("{title}: power and price"),
        x_label: "hour",
        y_label: "kW, ¢/kWh",
        series: vec![
            Series { name: "P (kW)", values: &d.p },
            Series { name: "price", values: &d.price },
        ],
        band: None,
        log_y: false,
    };
    write(&out.join("power.svg"), p.render())
}

fn next_inputs(s: &Settings, store: &DataStore, day: Option<u32>) -> DayInputs {
    gen_day_inputs(day.unwrap_or(store.last_day().day + 1), &s.cfg.gen)
}

fn run_gen(common: &Common, days: Option<usize>, seed: Option<u64>, price_kind: Option<String>) -> Result<()> {
    let s = settings(
        common,
        &[
            ("seed", seed.map(|v| v.to_string())),
            ("n_id", days.map(|d| (d * HOURS).to_string())),
            ("price_kind", price_kind),
        ],
    )?;
    fs::create_dir_all(&common.out)?;
    let (store, state) = gen_initial_dataset(&s.cfg.gen, &s.cfg.plant)?;
    save_store(&common.out, &store, &state)?;
    write_manifest(&common.out, "gen", &s, serde_json::json!({ "days": store.episodes().len(), "rows": store.n_rows() }))?;
    println!("wrote {} days ({} rows) to {}", store.episodes().len(), store.n_rows(), common.out.display());
    Ok(())
}

fn run_train(common: &Common, store_dir: &Path, topology: Option<String>) -> Result<()> {
    let s = settings(common, &[("topology", topology)])?;
    let sd = load_store(store_dir, s.cfg.seed)?;
    fs::create_dir_all(&common.out)?;
    let (model, reports) = bootstrap(&sd.store, &s.cfg.composite)?;
    save_model(&common.out.join("model.txt"), &model)?;
    write(&common.out.join("train_report.json"), serde_json::to_string_pretty(&reports)?)?;
    write_manifest(&common.out, "train", &s, serde_json::json!({ "store": store_dir, "model": model.manifest() }))?;
    for r in &reports {
        println!("{}: validation loss {:.4e} -> {:.4e}", r.role.name(), r.initial_val, r.best_val);
    }
    Ok(())
}

fn run_schedule(common: &Common, model: &Path, store_dir: &Path, day: Option<u32>, objective: Option<String>, restarts: Option<usize>) -> Result<()> {
    let s = settings(
        common,
        &[("objective", objective), ("restarts", restarts.map(|r| r.to_string()))],
    )?;
    let m = load_model(model)?;
    let sd = load_store(store_dir, s.cfg.seed)?;
    let inputs = next_inputs(&s, &sd.store, day);
    let tl = sd.store.timeline();
    let history = HistoryBuffer::from_timeline(tl, tl.len(), m.history_len())?;
    let mut params = s.cfg.schedule.clone();
    let eval = eval_suite(&s.cfg.gen, &s.cfg.plant, s.cfg.eval_days)?;
    let margin = model_margin(&s.cfg, &m, &eval)?;
    params.t_min += margin;
    params.t_max -= margin;
    let problem = ScheduleProblem {
        price: inputs.price,
        env: inputs.env,
        params,
    };
    let r = optimize(&problem, &m, &history, &[RULE_SETPOINT; HOURS])?;
    fs::create_dir_all(&common.out)?;
    write_schedule_csv(fs::File::create(common.out.join("schedule.csv"))?, &r)?;
    let (real, _) = simulate_day(&sd.state, &inputs, &r.setpoints, &s.cfg.plant)?;
    day_table(&common.out.join("realized.csv"), &real)?;
    day_plots(&common.out, &real, &s, &format!("day {}", inputs.day))?;
    let band = s.cfg.comfort_band();
    let diag = serde_json::json!({
        "day": inputs.day,
        "comfort_margin": margin,
        "j": r.j,
        "j_init": r.j_init,
        "breakdown": r.breakdown,
        "restart": r.restart,
        "stopped_at": r.stopped_at,
        "cost_predicted": r.cost_pred,
        "cost_realized": energy_cost(&inputs.price, &real.p),
        "v_tc_realized": comfort_violation(&real.t_indoor, &band),
        "j_history": r.j_history,
    });
    write(&common.out.join("diagnostics.json"), serde_json::to_string_pretty(&diag)?)?;
    write_manifest(&common.out, "schedule", &s, serde_json::json!({ "model": model, "store": store_dir }))?;
    println!(
        "day {}: J {:.4} (from {:.4}), predicted cost {:.2} $, realized cost {:.2} $",
        inputs.day, r.j, r.j_init, r.cost_pred, diag["cost_realized"].as_f64().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn curve_plots(out: &Path, run: &OnlineRun) -> Result<()> {
    let recs = &run.curve.records;
    let col = |f: fn(&hvac_core::online::DayRecord) -> f64| recs.iter().map(f).collect::<Vec<f64>>();
    let (p, q, t) = (col(|r| r.nrmse.p), col(|r| r.nrmse.q), col(|r| r.nrmse.t_indoor));
    let chart = Chart {
        title: "closed-loop nRMSE",
        x_label: "day index",
        y_label: "nRMSE",
        series: vec![
            Series { name: "P", values: &p },
            Series { name: "Q", values: &q },
            Series { name: "T_i", values: &t },
        ],
        band: None,
        log_y: true,
    };
    write(&out.join("nrmse.svg"), chart.render())?;
    let (c1, c2, c3) = (col(|r| r.cost_proposed), col(|r| r.cost_ideal), col(|r| r.cost_rule));
    let chart = Chart {
        title: "daily energy cost",
        x_label: "day index",
        y_label: "$",
        series: vec![
            Series { name: "proposed", values: &c1 },
            Series { name: "ideal", values: &c2 },
            Series { name: "rule-based", values: &c3 },
        ],
        band: None,
        log_y: false,
    };
    write(&out.join("cost.svg"), chart.render())
}

fn run_online(
    common: &Common,
    days: Option<usize>,
    warm_epochs: Option<usize>,
    seed: Option<u64>,
    store_dir: Option<&Path>,
    model: Option<&Path>,
    checkpoint_every: Option<usize>,
) -> Result<()> {
    let s = settings(
        common,
        &[
            ("seed", seed.map(|v| v.to_string())),
            ("n_d", days.map(|v| v.to_string())),
            ("warm_epochs", warm_epochs.map(|v| v.to_string())),
        ],
    )?;
    if checkpoint_every == Some(0) {
        bail!("--checkpoint-every must be at least 1");
    }
    fs::create_dir_all(&common.out)?;
    let cfg = s.cfg.clone();
    let mut run = match store_dir {
        Some(dir) => {
            let sd = load_store(dir, cfg.seed)?;
            let m = model.map(load_model).transpose()?;
            OnlineRun::start_from(cfg.clone(), sd.store, sd.state, m)?
        }
        None => {
            if model.is_some() {
                bail!("--model needs --store");
            }
            OnlineRun::start(cfg.clone())?
        }
    };
    let ckpt = common.out.join("checkpoints");
    if checkpoint_every.is_some() {
        fs::create_dir_all(&ckpt)?;
    }
    for _ in 0..cfg.n_days {
        let r = run.step()?.clone();
        println!(
            "day {:3}: cost {:.2} $ (ideal {:.2}, rule {:.2}), r_CR {:.1}%, v_TC {:.3}",
            r.day, r.cost_proposed, r.cost_ideal, r.cost_rule, r.r_cr, r.v_tc
        );
        if let Some(k) = checkpoint_every {
            if r.day % k == 0 {
                save_model(&ckpt.join(format!("day_{:03}.txt", r.day)), &run.model)?;
            }
        }
    }
    run.curve.write_csv(fs::File::create(common.out.join("learning_curve.csv"))?)?;
    save_model(&common.out.join("model.txt"), &run.model)?;
    save_store(&common.out, &run.store, &run.state)?;
    curve_plots(&common.out, &run)?;
    write_manifest(&common.out, "online", &s, serde_json::json!({ "model": run.model.manifest() }))?;
    Ok(())
}

fn run_baseline(common: &Common, kind: &str, store_dir: &Path, day: Option<u32>) -> Result<()> {
    let s = settings(common, &[])?;
    let sd = load_store(store_dir, s.cfg.seed)?;
    let inputs = next_inputs(&s, &sd.store, day);
    let c = &s.cfg;
    let mut extra = serde_json::json!({ "kind": kind, "day": inputs.day });
    let setpoints = match kind {
        "rule" => [RULE_SETPOINT; HOURS],
        _ => {
            let m = c.ideal_margin;
            let comfort: Vec<_> = c.comfort_band().iter().map(|b| b.map(|b| (b.lo + m, b.hi - m))).collect();
            let plan = solve_ideal(&sd.state, &inputs, &c.plant, c.n_blocks, &comfort, Some(c.comfort_penalty), &c.bnb)?;
            let rec = recover_setpoints(&plan.power, &sd.state, &inputs, &c.plant)?;
            extra["mip_objective"] = plan.mip.objective.into();
            extra["mip_nodes"] = plan.mip.nodes.into();
            extra["mip_gap"] = plan.mip.gap.into();
            extra["max_recovery_residual"] = rec.residual.iter().copied().fold(0.0, f64::max).into();
            rec.setpoints
        }
    };
    let (real, _) = simulate_day(&sd.state, &inputs, &setpoints, &c.plant)?;
    fs::create_dir_all(&common.out)?;
    day_table(&common.out.join("schedule.csv"), &real)?;
    day_plots(&common.out, &real, &s, &format!("{kind} baseline, day {}", inputs.day))?;
    let cost = energy_cost(&inputs.price, &real.p);
    let v = comfort_violation(&real.t_indoor, &c.comfort_band());
    extra["cost"] = cost.into();
    extra["v_tc"] = v.into();
    write_manifest(&common.out, "baseline", &s, extra)?;
    println!("{kind} baseline, day {}: cost {cost:.2} $, v_TC {v:.3}", inputs.day);
    Ok(())
}

fn run_compare(common: &Common, days: Option<usize>, seed: Option<u64>, ablations: bool) -> Result<()> {
    let s = settings(
        common,
        &[("seed", seed.map(|v| v.to_string())), ("n_d", days.map(|v| v.to_string()))],
    )?;
    fs::create_dir_all(&common.out)?;
    let (runs, ablation_rows) = if ablations {
        let (rows, runs) = ablation_study(&s.cfg)?;
        (runs, Some(rows))
    } else {
        (vec![online_loop_with(s.cfg.clone(), |_| Ok(()))?], None)
    };
    let main = &runs[0];
    let recs = &main.curve.records;
    let n = recs.len() as f64;
    let mean = |f: fn(&hvac_core::online::DayRecord) -> f64| recs.iter().map(f).sum::<f64>() / n;
    let cases = [
        ("Case 1 (proposed)", mean(|r| r.cost_proposed), mean(|r| r.v_tc)),
        ("Case 2 (ideal)", mean(|r| r.cost_ideal), mean(|r| r.v_tc_ideal)),
        ("Case 3 (rule-based)", mean(|r| r.cost_rule), mean(|r| r.v_tc_rule)),
    ];
    let rule = cases[2].1;
    let mut md = String::from("# Case comparison\n\n");
    md.push_str(&format!("{} online days, seed {}.\n\n", recs.len(), s.cfg.seed));
    md.push_str("| case | mean C_E ($/day) | r_CR (%) | mean v_TC (°C·h) |\n|---|---|---|---|\n");
    let mut json_cases = Vec::new();
    for (name, cost, v) in cases {
        let r = cost_reduction_rate(cost, rule).unwrap_or(f64::NAN);
        md.push_str(&format!("| {name} | {cost:.3} | {r:.1} | {v:.3} |\n"));
        json_cases.push(serde_json::json!({ "case": name, "cost": cost, "r_cr": r, "v_tc": v }));
    }
    let q = main.curve.quartile_means(|r| r.r_cr);
    md.push_str(&format!(
        "\nQuartile-mean r_CR (%): {:.2}, {:.2}, {:.2}, {:.2}\n",
        q[0], q[1], q[2], q[3]
    ));
    let mut report = serde_json::json!({ "cases": json_cases, "quartile_r_cr": q });
    if let Some(rows) = &ablation_rows {
        md.push_str("\n# Ablation\n\n| model | training | nRMSE P | nRMSE Q | nRMSE T_i | mean C_E ($/day) |\n|---|---|---|---|---|---|\n");
        for r in rows {
            md.push_str(&format!(
                "| {} | {} | {:.3e} | {:.3e} | {:.3e} | {:.3} |\n",
                r.topology.name(),
                if r.online { "online" } else { "offline" },
                r.nrmse.p,
                r.nrmse.q,
                r.nrmse.t_indoor,
                r.mean_cost
            ));
        }
        report["ablation"] = serde_json::to_value(rows)?;
    }
    write(&common.out.join("report.md"), &md)?;
    write(&common.out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    main.curve.write_csv(fs::File::create(common.out.join("learning_curve.csv"))?)?;
    curve_plots(&common.out, main)?;
    write_manifest(&common.out, "compare", &s, serde_json::json!({ "ablations": ablations }))?;
    print!("{md}");
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Gen { common, days, seed, price_kind } => run_gen(common, *days, *seed, price_kind.clone()),
        Cmd::Train { common, store, topology } => run_train(common, store, topology.clone()),
        Cmd::Schedule { common, model, store, day, objective, restarts } => {
            run_schedule(common, model, store, *day, objective.clone(), *restarts)
        }
        Cmd::Online { common, days, warm_epochs, seed, store, model, checkpoint_every } => {
            run_online(common, *days, *warm_epochs, *seed, store.as_deref(), model.as_deref(), *checkpoint_every)
        }
        Cmd::Baseline { common, kind, store, day } => run_baseline(common, kind, store, *day),
        Cmd::Compare { common, days, seed, ablations } => run_compare(common, *days, *seed, *ablations),
    };
    if let Err(e) = res {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
