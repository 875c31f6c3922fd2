use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    plots, schema, CalibrationTarget, ChannelArgs, Cli, Command, Common, ProfileArgs, RadioArgs,
    ScenarioArgs,
};
use crate::analytics::{roc_csv, roc_curve};
use crate::bundled;
use crate::channel::{
    fit_two_regime, link_budget, success_two_regime, ChannelParams, FitResult, RadioParams,
    TwoRegimeFit,
};
use crate::energy::{
    avg_current_multi, cycle_energy, lifetime_from_energy, BatterySpec, EnergyProfile,
};
use crate::engine::calibrate::{
    calibrate_buffer, calibrate_cloud_rate, calibrate_obstruction, Calibration,
};
use crate::engine::sweep::{failures_csv, loss_vs_n_csv, sweep_csv, throughput_vs_n_csv};
use crate::engine::{failure_sweep, run, sweep, MetricsReport, Scenario};
use crate::error::{Error, Result};
use crate::io::{canonical_hash, OutputSet, RunManifest};
use crate::reliability::{collision_prob, collision_prob_jitter, MacParams};

const FIT_GRID_POINTS: usize = 200;

pub(super) fn dispatch(cli: &Cli, argv: &[String]) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.jobs)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    pool.install(|| execute(cli, argv))
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    let c = &cli.common;
    let started = Instant::now();
    let ctx = Ctx {
        common: c,
        argv,
        started,
    };
    match &cli.command {
        Command::Simulate { scenario } => simulate(&ctx, scenario),
        Command::Sweep {
            scenario,
            counts,
            replicates,
        } => sweep_cmd(&ctx, scenario, counts, *replicates),
        Command::Failures {
            scenario,
            max_failures,
            replicates,
        } => failures_cmd(&ctx, scenario, *max_failures, *replicates),
        Command::Linkbudget {
            scenario,
            distances_m,
            radio,
            channel,
        } => linkbudget_cmd(&ctx, scenario.as_deref(), distances_m, radio, channel),
        Command::Battery {
            intervals_s,
            profile,
            radio,
        } => battery_cmd(&ctx, intervals_s, profile, radio),
        Command::Collision {
            counts,
            tau,
            k_microslots,
            scenario,
        } => collision_cmd(&ctx, counts, *tau, *k_microslots, scenario),
        Command::Fit { input, params } => fit_cmd(&ctx, input.as_deref(), params.as_deref()),
        Command::Validate { scenario } => validate_cmd(&ctx, scenario),
        Command::Selfcheck { dir } => selfcheck_cmd(dir.as_deref()),
        Command::Calibrate {
            target,
            seeds,
            scenario,
        } => calibrate_cmd(&ctx, *target, *seeds, scenario.as_deref()),
        Command::Reference => reference_cmd(&ctx),
        Command::Scenarios { name } => scenarios_cmd(name.as_deref()),
    }
}

struct Ctx<'a> {
    common: &'a Common,
    argv: &'a [String],
    started: Instant,
}

impl Ctx<'_> {
    fn outputs(&self) -> OutputSet {
        OutputSet::new(&self.common.out)
    }

    fn finish(
        &self,
        mut out: OutputSet,
        scenario: Option<&Scenario>,
        effective: Value,
    ) -> Result<()> {
        let manifest = RunManifest {
            command_line: self.argv.to_vec(),
            scenario_hash: scenario.map(canonical_hash).transpose()?,
            seed: scenario.map(|s| s.seed),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: out.written().to_vec(),
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            effective,
        };
        out.write_json("manifest.json", &manifest)?;
        for p in out.written() {
            log::info!("wrote {}", p.display());
        }
        Ok(())
    }
}

/// Scenario file or bundled name, then environment overlay, then overlay
/// files, then flag overrides.
pub(super) fn load_scenario(args: &ScenarioArgs, seed: Option<u64>) -> Result<Scenario> {
    let path = Path::new(&args.scenario);
    let mut sc = if path.is_file() {
        Scenario::from_json_str(&std::fs::read_to_string(path)?)?
    } else if bundled::source(&args.scenario).is_some() || args.scenario == bundled::REFERENCE_NAME
    {
        bundled::scenario(&args.scenario)?
    } else {
        return Err(Error::Validation(vec![format!(
            "scenario '{}' is neither a readable file nor a bundled name ({})",
            args.scenario,
            bundled::names().join(", ")
        )]));
    };
    if let Some(inline) = &args.env_overlay {
        let v: Value = serde_json::from_str(inline).map_err(|e| {
            Error::Validation(vec![format!("AGROTRACK_OVERLAY is not valid JSON: {e}")])
        })?;
        sc = sc.with_overlay(&v)?;
    }
    for file in &args.overlays {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(file)?)?;
        sc = sc.with_overlay(&v)?;
    }
    if let Some(d) = args.duration_s {
        sc.duration_s = d;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
    sc.validate()?;
    Ok(sc)
}

fn effective(common: &Common, sc: Option<&Scenario>, extra: Value) -> Result<Value> {
    let mut v = json!({
        "seed": sc.map(|s| s.seed).or(common.seed),
        "jobs": rayon::current_num_threads(),
        "out": common.out,
    });
    if let Some(sc) = sc {
        v["scenario"] = serde_json::to_value(sc)?;
    }
    if let (Value::Object(m), Value::Object(x)) = (&mut v, extra) {
        m.extend(x);
    }
    Ok(v)
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    duration_s: f64,
    nodes: u32,
    generated: u64,
    pdr: f64,
    loss: f64,
    loss_by_cause: &'a [(String, f64)],
    tx_attempts: u64,
    collision_rate: f64,
    cloud_accepted: u64,
    cloud_dropped: u64,
    throughput_msg_s: f64,
    outage_generated: u64,
    outage_recovered: u64,
    recovery_ratio: f64,
    alerts: usize,
    mean_projected_lifetime_h: Option<f64>,
    events_processed: u64,
}

fn summary(r: &MetricsReport) -> Summary<'_> {
    Summary {
        scenario: &r.scenario,
        seed: r.seed,
        duration_s: r.duration_s,
        nodes: r.nodes,
        generated: r.generated,
        pdr: r.pdr,
        loss: r.loss,
        loss_by_cause: &r.loss_by_cause,
        tx_attempts: r.tx_attempts,
        collision_rate: r.collision_rate,
        cloud_accepted: r.cloud_accepted,
        cloud_dropped: r.cloud_dropped,
        throughput_msg_s: r.throughput_msg_s,
        outage_generated: r.outage_generated,
        outage_recovered: r.outage_recovered,
        recovery_ratio: r.recovery_ratio,
        alerts: r.alert_log.len(),
        mean_projected_lifetime_h: r.mean_projected_lifetime_h(),
        events_processed: r.events_processed,
    }
}

pub(super) fn write_simulation(out: &mut OutputSet, r: &MetricsReport) -> Result<()> {
    out.write_json("summary.json", &summary(r))?;
    out.write("fates.csv", &r.fates_csv())?;
    out.write("throughput.csv", &r.throughput_csv())?;
    out.write("battery.csv", &r.battery_csv())?;
    out.write("alerts.csv", &r.alerts_csv())?;
    out.write("episodes.csv", &r.episodes_csv())?;
    out.write("distance.csv", &r.distance_csv())?;
    out.write_json("plots.json", &plots::simulate())?;
    Ok(())
}

fn simulate(ctx: &Ctx, args: &ScenarioArgs) -> Result<()> {
    let sc = load_scenario(args, ctx.common.seed)?;
    let report = run(&sc)?;
    let mut out = ctx.outputs();
    write_simulation(&mut out, &report)?;
    println!("{}", serde_json::to_string_pretty(&summary(&report))?);
    ctx.finish(out, Some(&sc), effective(ctx.common, Some(&sc), json!({}))?)
}

fn sweep_cmd(ctx: &Ctx, args: &ScenarioArgs, counts: &[u32], replicates: u32) -> Result<()> {
    let sc = load_scenario(args, ctx.common.seed)?;
    let rows = sweep(&sc, counts, replicates)?;
    let mut out = ctx.outputs();
    out.write("sweep.csv", &sweep_csv(&rows))?;
    out.write("loss_vs_n.csv", &loss_vs_n_csv(&rows))?;
    out.write("throughput_vs_n.csv", &throughput_vs_n_csv(&rows))?;
    out.write_json("plots.json", &plots::sweep())?;
    print!("{}", sweep_csv(&rows));
    let extra = json!({ "counts": counts, "replicates": replicates });
    ctx.finish(out, Some(&sc), effective(ctx.common, Some(&sc), extra)?)
}

fn failures_cmd(ctx: &Ctx, args: &ScenarioArgs, max_failures: u32, replicates: u32) -> Result<()> {
    let sc = load_scenario(args, ctx.common.seed)?;
    let rows = failure_sweep(&sc, max_failures, replicates)?;
    let mut out = ctx.outputs();
    out.write("recovery.csv", &failures_csv(&rows))?;
    out.write_json("plots.json", &plots::failures())?;
    print!("{}", failures_csv(&rows));
    let extra = json!({ "max_failures": max_failures, "replicates": replicates });
    ctx.finish(out, Some(&sc), effective(ctx.common, Some(&sc), extra)?)
}

fn apply_radio(r: &mut RadioParams, a: &RadioArgs) {
    let RadioArgs {
        sf,
        bw_hz,
        tx_power_dbm,
        tx_gain_dbi,
        rx_gain_dbi,
        noise_figure_db,
        sensitivity_dbm,
        payload_bytes,
        coding_rate,
    } = a.clone();
    r.spreading_factor = sf.unwrap_or(r.spreading_factor);
    r.bandwidth_hz = bw_hz.unwrap_or(r.bandwidth_hz);
    r.tx_power_dbm = tx_power_dbm.unwrap_or(r.tx_power_dbm);
    r.tx_gain_dbi = tx_gain_dbi.unwrap_or(r.tx_gain_dbi);
    r.rx_gain_dbi = rx_gain_dbi.unwrap_or(r.rx_gain_dbi);
    r.noise_figure_db = noise_figure_db.unwrap_or(r.noise_figure_db);
    r.sensitivity_dbm = sensitivity_dbm.or(r.sensitivity_dbm);
    r.payload_bytes = payload_bytes.unwrap_or(r.payload_bytes);
    r.coding_rate = coding_rate.unwrap_or(r.coding_rate);
}

fn apply_channel(c: &mut ChannelParams, a: &ChannelArgs) {
    c.pl_d0_db = a.pl_d0_db.unwrap_or(c.pl_d0_db);
    c.d0_m = a.d0_m.unwrap_or(c.d0_m);
    c.path_loss_exponent = a.path_loss_exponent.unwrap_or(c.path_loss_exponent);
    c.shadowing_sigma_db = a.shadowing_sigma_db.unwrap_or(c.shadowing_sigma_db);
    c.obstruction_loss_db = a.obstruction_loss_db.unwrap_or(c.obstruction_loss_db);
    c.logistic_alpha_per_db = a.logistic_alpha_per_db.unwrap_or(c.logistic_alpha_per_db);
}

fn linkbudget_csv(
    distances: &[f64],
    radio: &RadioParams,
    channel: &ChannelParams,
) -> Result<String> {
    let mut s = schema::header(schema::schema_for("linkbudget.csv").expect("declared schema"));
    s.push('\n');
    for &d in distances {
        let r = link_budget(d, radio, channel)?;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.distance_m,
            r.path_loss_db,
            r.snr_db,
            r.margin_db,
            r.p_succ_los,
            r.p_succ_obs,
            r.p_succ_los_mean,
            r.p_succ_obs_mean
        ));
    }
    Ok(s)
}

fn linkbudget_cmd(
    ctx: &Ctx,
    scenario: Option<&str>,
    distances: &[f64],
    radio_args: &RadioArgs,
    channel_args: &ChannelArgs,
) -> Result<()> {
    let (mut radio, mut channel) = match scenario {
        Some(name) => {
            let args = ScenarioArgs {
                scenario: name.into(),
                env_overlay: None,
                overlays: Vec::new(),
                duration_s: None,
            };
            let sc = load_scenario(&args, None)?;
            (sc.radio, sc.channel)
        }
        None => (RadioParams::default(), ChannelParams::default()),
    };
    apply_radio(&mut radio, radio_args);
    apply_channel(&mut channel, channel_args);
    let csv = linkbudget_csv(distances, &radio, &channel)?;
    let mut out = ctx.outputs();
    out.write("linkbudget.csv", &csv)?;
    out.write_json("plots.json", &plots::linkbudget())?;
    print!("{csv}");
    let extra = json!({ "radio": radio, "channel": channel, "distances_m": distances });
    ctx.finish(out, None, effective(ctx.common, None, extra)?)
}

fn apply_profile(p: &mut EnergyProfile, b: &mut BatterySpec, a: &ProfileArgs) {
    p.i_sen_ma = a.i_sen_ma.unwrap_or(p.i_sen_ma);
    p.i_proc_ma = a.i_proc_ma.unwrap_or(p.i_proc_ma);
    p.i_tx_ma = a.i_tx_ma.unwrap_or(p.i_tx_ma);
    p.i_rx_ma = a.i_rx_ma.unwrap_or(p.i_rx_ma);
    p.i_slp_ma = a.i_slp_ma.unwrap_or(p.i_slp_ma);
    p.t_sen_s = a.t_sen_s.unwrap_or(p.t_sen_s);
    p.t_proc_s = a.t_proc_s.unwrap_or(p.t_proc_s);
    p.t_tx_s = a.t_tx_s.or(p.t_tx_s);
    p.t_rx_s = a.t_rx_s.unwrap_or(p.t_rx_s);
    p.solar_credit_mj_per_cycle = a
        .solar_credit_mj_per_cycle
        .unwrap_or(p.solar_credit_mj_per_cycle);
    b.capacity_mah = a.capacity_mah.unwrap_or(b.capacity_mah);
    b.voltage_v = a.voltage_v.unwrap_or(b.voltage_v);
}

/// Lifetime table and the daily depletion series of the first interval.
pub(super) fn battery_tables(
    intervals: &[f64],
    profile: &EnergyProfile,
    bat: &BatterySpec,
) -> Result<(String, String)> {
    if intervals.is_empty() {
        return Err(Error::Validation(vec![
            "at least one report interval is required".into(),
        ]));
    }
    let mut lifetime = schema::header(schema::schema_for("lifetime.csv").expect("declared schema"));
    lifetime.push('\n');
    let mut first_life_h = None;
    for &t in intervals {
        let p = EnergyProfile {
            report_interval_s: t,
            ..profile.clone()
        };
        let i_avg = avg_current_multi(&p)?;
        let e = cycle_energy(&p, bat)?;
        let life_h = lifetime_from_energy(&p, bat)?;
        first_life_h.get_or_insert(life_h);
        lifetime.push_str(&format!("{t},{i_avg},{e},{life_h},{}\n", life_h / 24.0));
    }
    let life_s = first_life_h.expect("non-empty") * 3600.0;
    let mut depletion =
        schema::header(schema::schema_for("depletion.csv").expect("declared schema"));
    depletion.push('\n');
    let days = (life_s / 86_400.0).ceil() as u64;
    for day in 0..=days {
        let t = (day as f64 * 86_400.0).min(life_s);
        let left = bat.capacity_mah * (1.0 - t / life_s);
        depletion.push_str(&format!("{t},{},{}\n", t / 86_400.0, left.max(0.0)));
    }
    Ok((lifetime, depletion))
}

fn battery_cmd(
    ctx: &Ctx,
    intervals: &[f64],
    profile_args: &ProfileArgs,
    radio_args: &RadioArgs,
) -> Result<()> {
    let mut radio = RadioParams::default();
    apply_radio(&mut radio, radio_args);
    radio.validate()?;
    let mut profile = EnergyProfile::default();
    let mut bat = BatterySpec::default();
    apply_profile(&mut profile, &mut bat, profile_args);
    let profile = profile.resolved(&radio)?;
    let (lifetime, depletion) = battery_tables(intervals, &profile, &bat)?;
    let mut out = ctx.outputs();
    out.write("lifetime.csv", &lifetime)?;
    out.write("depletion.csv", &depletion)?;
    out.write_json("plots.json", &plots::battery())?;
    print!("{lifetime}");
    let extra =
        json!({ "profile": profile, "battery": bat, "radio": radio, "intervals_s": intervals });
    ctx.finish(out, None, effective(ctx.common, None, extra)?)
}

pub(super) fn collision_csv(counts: &[u32], tau: f64, k: u32) -> Result<String> {
    let mut s = schema::header(schema::schema_for("collision.csv").expect("declared schema"));
    s.push('\n');
    for &n in counts {
        let p = MacParams {
            n_nodes: n,
            tau,
            k_microslots: k,
            slot_s: 1.0,
        };
        p.validate()?;
        s.push_str(&format!(
            "{n},{tau},{k},{},{}\n",
            collision_prob(&p),
            collision_prob_jitter(&p)
        ));
    }
    Ok(s)
}

fn collision_cmd(
    ctx: &Ctx,
    counts: &[u32],
    tau: Option<f64>,
    k: Option<u32>,
    scenario: &str,
) -> Result<()> {
    let args = ScenarioArgs {
        scenario: scenario.into(),
        env_overlay: None,
        overlays: Vec::new(),
        duration_s: None,
    };
    let mac = load_scenario(&args, None)?.mac_params()?;
    let tau = tau.unwrap_or(mac.tau);
    let k = k.unwrap_or(mac.k_microslots);
    let csv = collision_csv(counts, tau, k)?;
    let mut out = ctx.outputs();
    out.write("collision.csv", &csv)?;
    out.write_json("plots.json", &plots::collision())?;
    print!("{csv}");
    let extra = json!({ "counts": counts, "tau": tau, "k_microslots": k, "scenario": scenario });
    ctx.finish(out, None, effective(ctx.common, None, extra)?)
}

#[derive(Debug, Serialize, Deserialize)]
pub(super) struct FitDocument {
    #[serde(flatten)]
    pub result: FitResult,
    pub grid_max_m: f64,
}

/// Distance, success pairs from a two-column CSV; a non-numeric first row is a header.
pub(super) fn read_points(body: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut pts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Validation(vec![format!(
                "row {}: expected distance,success",
                i + 1
            )]));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(d), Ok(p)) => pts.push((d, p)),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Validation(vec![format!(
                    "row {}: non-numeric value",
                    i + 1
                )]))
            }
        }
    }
    Ok(pts)
}

pub(super) fn fit_curve_csv(fit: &TwoRegimeFit, grid_max_m: f64) -> String {
    let mut s = schema::header(schema::schema_for("fit_curve.csv").expect("declared schema"));
    s.push('\n');
    for i in 0..FIT_GRID_POINTS {
        let d = grid_max_m * i as f64 / (FIT_GRID_POINTS - 1) as f64;
        s.push_str(&format!("{d},{}\n", success_two_regime(d, fit)));
    }
    s
}

fn fit_cmd(ctx: &Ctx, input: Option<&Path>, params: Option<&Path>) -> Result<()> {
    let doc = match (input, params) {
        (Some(path), _) => {
            let pts = read_points(&std::fs::read_to_string(path)?)?;
            let result = fit_two_regime(&pts)?;
            let grid_max_m = pts.iter().map(|p| p.0).fold(0.0, f64::max);
            FitDocument { result, grid_max_m }
        }
        (None, Some(path)) => {
            let doc: FitDocument = serde_json::from_str(&std::fs::read_to_string(path)?)
                .map_err(|e| Error::Validation(vec![format!("{}: {e}", path.display())]))?;
            doc.result.fit.validate()?;
            doc
        }
        (None, None) => {
            return Err(Error::Validation(vec![
                "either --input or --params is required".into(),
            ]))
        }
    };
    if !(doc.grid_max_m > 0.0 && doc.grid_max_m.is_finite()) {
        return Err(Error::Validation(vec![format!(
            "curve extent must be > 0 (got {})",
            doc.grid_max_m
        )]));
    }
    let mut out = ctx.outputs();
    out.write_json("fit.json", &doc)?;
    out.write(
        "fit_curve.csv",
        &fit_curve_csv(&doc.result.fit, doc.grid_max_m),
    )?;
    out.write_json("plots.json", &plots::fit())?;
    println!("{}", serde_json::to_string_pretty(&doc)?);
    let extra = json!({ "input": input, "params": params });
    ctx.finish(out, None, effective(ctx.common, None, extra)?)
}

fn validate_cmd(ctx: &Ctx, args: &ScenarioArgs) -> Result<()> {
    let sc = load_scenario(args, ctx.common.seed)?;
    let doc = json!({
        "valid": true,
        "name": sc.name,
        "seed": sc.seed,
        "scenario_hash": canonical_hash(&sc)?,
        "airtime_s": sc.airtime()?,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

/// Generate a small but complete set of outputs into `dir`.
fn smoke_outputs(dir: &Path) -> Result<()> {
    let mut out = OutputSet::new(dir);
    let mut trial = bundled::scenario("trial_baseline")?;
    trial.duration_s = 2.0 * 86_400.0;
    write_simulation(&mut out, &run(&trial)?)?;

    let mut scaling = bundled::scenario("scaling")?;
    scaling.duration_s = 300.0;
    let rows = sweep(&scaling, &[15, 30], 2)?;
    out.write("sweep.csv", &sweep_csv(&rows))?;
    out.write("loss_vs_n.csv", &loss_vs_n_csv(&rows))?;
    out.write("throughput_vs_n.csv", &throughput_vs_n_csv(&rows))?;

    let mut robust = bundled::scenario("robustness")?;
    robust.herd.count = 10;
    robust.duration_s = 36_000.0;
    out.write(
        "recovery.csv",
        &failures_csv(&failure_sweep(&robust, 2, 1)?),
    )?;

    let radio = RadioParams::default();
    let channel = ChannelParams::default();
    out.write(
        "linkbudget.csv",
        &linkbudget_csv(&[100.0, 1000.0, 6500.0], &radio, &channel)?,
    )?;
    let profile = EnergyProfile::default().resolved(&radio)?;
    let (lifetime, depletion) = battery_tables(&[300.0, 600.0], &profile, &BatterySpec::default())?;
    out.write("lifetime.csv", &lifetime)?;
    out.write("depletion.csv", &depletion)?;

    let fit = TwoRegimeFit {
        pi_obs: 0.3,
        d_c_m: 5000.0,
        beta: 2.5,
        d_c_obs_m: 1500.0,
        beta_obs: 2.0,
    };
    out.write("fit_curve.csv", &fit_curve_csv(&fit, 8000.0))?;
    out.write("collision.csv", &collision_csv(&[5, 50], 0.01, 8)?)?;
    let roc = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true])?;
    out.write("roc.csv", &roc_csv(&roc))?;
    for (name, body) in bundled::COMPARISON_REFERENCE {
        out.write(name, body)?;
    }
    Ok(())
}

fn selfcheck_cmd(dir: Option<&Path>) -> Result<()> {
    let tmp;
    let dir: PathBuf = match dir {
        Some(d) => d.to_path_buf(),
        None => {
            tmp = tempfile::tempdir()?;
            smoke_outputs(tmp.path())?;
            tmp.path().to_path_buf()
        }
    };
    let checks = schema::check_dir(&dir)?;
    println!("{}", serde_json::to_string_pretty(&checks)?);
    let problems: Vec<String> = checks
        .iter()
        .flat_map(|c| c.problems.iter().map(move |p| format!("{}: {p}", c.file)))
        .collect();
    if checks.is_empty() {
        return Err(Error::Validation(vec![format!(
            "no CSV files found in {}",
            dir.display()
        )]));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

fn calibrate_cmd(
    ctx: &Ctx,
    target: CalibrationTarget,
    seeds: u32,
    scenario: Option<&str>,
) -> Result<()> {
    let load = |default: &str| {
        let args = ScenarioArgs {
            scenario: scenario.unwrap_or(default).into(),
            env_overlay: None,
            overlays: Vec::new(),
            duration_s: None,
        };
        load_scenario(&args, ctx.common.seed)
    };
    let want = |t: CalibrationTarget| target == t || target == CalibrationTarget::All;
    let mut results: Vec<(&str, Calibration)> = Vec::new();
    if want(CalibrationTarget::Obstruction) {
        results.push((
            "obstruction",
            calibrate_obstruction(&load("trial_baseline")?, 0.98, seeds)?,
        ));
    }
    if want(CalibrationTarget::CloudRate) {
        results.push((
            "cloud_rate",
            calibrate_cloud_rate(&load("scaling")?, 600, 75.0, seeds)?,
        ));
    }
    if want(CalibrationTarget::Buffer) {
        results.push((
            "buffer",
            calibrate_buffer(&load("robustness")?, 4, 0.85, seeds)?,
        ));
    }
    let mut out = ctx.outputs();
    for (name, cal) in &results {
        out.write_json(&format!("overlay_{name}.json"), &cal.overlay)?;
    }
    let all: Vec<&Calibration> = results.iter().map(|(_, c)| c).collect();
    out.write_json("calibration.json", &all)?;
    println!("{}", serde_json::to_string_pretty(&all)?);
    ctx.finish(
        out,
        None,
        effective(ctx.common, None, json!({ "seeds": seeds }))?,
    )
}

fn reference_cmd(ctx: &Ctx) -> Result<()> {
    let mut out = ctx.outputs();
    for (name, body) in bundled::COMPARISON_REFERENCE {
        out.write(name, body)?;
    }
    let files: Vec<&str> = bundled::COMPARISON_REFERENCE
        .iter()
        .map(|(n, _)| *n)
        .collect();
    let doc = json!({
        "name": bundled::REFERENCE_NAME,
        "source": "published",
        "simulated": false,
        "note": "figures for the comparison systems are reproduced as published, not simulated",
        "files": files,
    });
    out.write_json("reference.json", &doc)?;
    print!("{}", bundled::COMPARISON_REFERENCE[0].1);
    ctx.finish(out, None, effective(ctx.common, None, json!({}))?)
}

fn scenarios_cmd(name: Option<&str>) -> Result<()> {
    match name {
        None => {
            for n in bundled::names() {
                println!("{n}");
            }
            Ok(())
        }
        Some(n) if n == bundled::REFERENCE_NAME => {
            for (file, body) in bundled::COMPARISON_REFERENCE {
                println!("# {file}");
                print!("{body}");
            }
            Ok(())
        }
        Some(n) => {
            let sc = bundled::scenario(n)?;
            println!("{}", sc.to_json_pretty()?);
            Ok(())
        }
    }
}
