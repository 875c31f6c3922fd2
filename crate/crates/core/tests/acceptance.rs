//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::process::ExitCode;
use std::time::Instant;

use agrotrack::analytics::{auroc, kmeans_cluster, RuleKind};
use agrotrack::bundled;
use agrotrack::channel::{
    fit_two_regime, link_budget, success_two_regime, ChannelParams, RadioParams, TwoRegimeFit,
};
use agrotrack::energy::{
    avg_current_multi, lifetime_from_energy, lifetime_hours, BatterySpec, EnergyProfile,
};
use agrotrack::engine::scenario::Timing;
use agrotrack::engine::sweep::replicate_seed;
use agrotrack::engine::{failure_sweep, run, sweep, Fate, MetricsReport, Scenario};
use agrotrack::reliability::{collision_prob, loss_decomposition, MacParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Suite {
    failed: usize,
}

impl Suite {
    fn check(&mut self, id: u32, name: &str, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                self.failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} [{id:>2}] {name}: {detail} ({:.1} s)",
            t.elapsed().as_secs_f64()
        );
    }
}

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn trial(days: f64) -> Scenario {
    let mut s = bundled::scenario("trial_baseline").expect("bundled scenario");
    s.duration_s = days * 86_400.0;
    s
}

fn runs(base: &Scenario, seeds: u32) -> Vec<MetricsReport> {
    (0..seeds)
        .map(|r| {
            let mut s = base.clone();
            s.seed = replicate_seed(base.seed, r);
            run(&s).expect("run")
        })
        .collect()
}

fn baseline_pdr() -> Outcome {
    let reports = runs(&trial(28.0), 10);
    let pdrs: Vec<f64> = reports.iter().map(|r| r.pdr).collect();
    let mean = pdrs.iter().sum::<f64>() / pdrs.len() as f64;
    let min = pdrs.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(
        mean >= 0.975 && min >= 0.965,
        format!("28 days x 10 seeds, mean PDR {mean:.4} (>= 0.975), min {min:.4} (>= 0.965)"),
    )
}

fn range() -> Outcome {
    let (radio, channel) = (RadioParams::default(), ChannelParams::default());
    let far = link_budget(6500.0, &radio, &channel).map_err(|e| e.to_string())?;
    let near = link_budget(3000.0, &radio, &channel).map_err(|e| e.to_string())?;
    ensure(
        far.p_succ_los_mean >= 0.5 && near.p_succ_los_mean >= 0.9 && far.p_succ_obs_mean <= 0.2,
        format!(
            "LoS 6.5 km {:.3} (>= 0.5), LoS 3 km {:.3} (>= 0.9), obstructed 6.5 km {:.3} (<= 0.2), shadowing-averaged",
            far.p_succ_los_mean, near.p_succ_los_mean, far.p_succ_obs_mean
        ),
    )
}

fn battery() -> Outcome {
    let radio = RadioParams::default();
    let bat = BatterySpec::default();
    let life = |t: f64| {
        let p = EnergyProfile {
            report_interval_s: t,
            ..EnergyProfile::default()
        }
        .resolved(&radio)?;
        lifetime_from_energy(&p, &bat)
    };
    let (h300, h600, h900) = (life(300.0), life(600.0), life(900.0));
    let (h300, h600, h900) = (
        h300.map_err(|e| e.to_string())?,
        h600.map_err(|e| e.to_string())?,
        h900.map_err(|e| e.to_string())?,
    );

    // engine coulomb count over a week against the closed-form draw
    let mut sc = trial(7.0);
    sc.episodes.clear();
    let r = run(&sc).map_err(|e| e.to_string())?;
    let i_avg = avg_current_multi(&sc.energy.resolved(&sc.radio).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let end = r
        .battery_series
        .iter()
        .map(|p| p.time_s)
        .fold(0.0, f64::max);
    let expected = i_avg * end / 3600.0;
    let worst = r
        .battery_series
        .iter()
        .filter(|p| p.time_s == end)
        .map(|p| ((bat.capacity_mah - p.battery_mah) / expected - 1.0).abs())
        .fold(0.0, f64::max);
    ensure(
        (h300 / 672.0 - 1.0).abs() <= 0.05 && h600 > 1008.0 && h900 > 1008.0 && worst <= 0.01,
        format!(
            "300 s {h300:.2} h (672 +/- 5%), 600 s {h600:.0} h, 900 s {h900:.0} h (> 1008), engine drain vs closed form worst {:.3}% (<= 1%)",
            100.0 * worst
        ),
    )
}

fn scaling(rows: &[agrotrack::engine::SweepRow]) -> Outcome {
    let loss: Vec<f64> = rows.iter().map(|r| r.loss.mean).collect();
    let small_ok = rows
        .iter()
        .filter(|r| r.n <= 200)
        .all(|r| r.loss.mean <= 0.035);
    let at600 = rows
        .iter()
        .find(|r| r.n == 600)
        .map(|r| r.loss.mean)
        .unwrap_or(f64::NAN);
    let monotone = loss.windows(2).all(|w| w[1] >= w[0]);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{:.4}", r.n, r.loss.mean))
        .collect();
    ensure(
        small_ok && at600 > 0.12 && monotone,
        format!(
            "loss {} (<= 0.035 up to 200, > 0.12 at 600, monotone)",
            table.join(" ")
        ),
    )
}

fn throughput(rows: &[agrotrack::engine::SweepRow]) -> Outcome {
    let t: Vec<f64> = rows.iter().map(|r| r.throughput_msg_s.mean).collect();
    let at600 = rows
        .iter()
        .find(|r| r.n == 600)
        .map(|r| r.throughput_msg_s.mean)
        .unwrap_or(f64::NAN);
    let peak = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let argmax = t.iter().position(|&x| x == peak).unwrap_or(0);
    let rising = t[..=argmax].windows(2).all(|w| w[1] >= w[0]);
    let plateau = t[argmax..].iter().all(|&x| x >= 0.98 * peak);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{:.2}", r.n, r.throughput_msg_s.mean))
        .collect();
    ensure(
        (at600 - 75.0).abs() <= 7.5 && rising && plateau,
        format!(
            "msg/s {} (75 +/- 7.5 at 600, non-decreasing to plateau)",
            table.join(" ")
        ),
    )
}

fn robustness() -> Outcome {
    let base = bundled::scenario("robustness").expect("bundled scenario");
    let rows = failure_sweep(&base, 4, 10).map_err(|e| e.to_string())?;
    let r: Vec<f64> = rows.iter().map(|x| x.recovery_ratio.mean).collect();
    let strictly = r.windows(2).all(|w| w[1] < w[0]);
    ensure(
        (r[0] - 1.0).abs() < 1e-12 && (r[4] - 0.85).abs() <= 0.02 && strictly,
        format!(
            "recovery by failures {} (1.00 at 0, 0.85 +/- 0.02 at 4, strictly decreasing)",
            r.iter()
                .map(|x| format!("{x:.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    )
}

fn slotted(n: u32, jitter: bool, seed: u64) -> Scenario {
    let mut s = trial(7.0);
    s.herd.count = n;
    s.episodes.clear();
    s.field.obstructions_m.clear();
    s.mac.timing = Timing::Slotted;
    s.mac.channels = 1;
    s.mac.capture_threshold_db = None;
    s.mac.jitter = jitter;
    // micro-slots at least one airtime wide, so distinct micro-slots never overlap
    s.mac.slot_s = Some(f64::from(s.mac.k_microslots) * s.airtime().expect("valid radio"));
    s.seed = seed;
    s
}

fn equivalence() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for n in [5u32, 15, 50] {
        let (mut col, mut att, mut col_j) = (0u64, 0u64, 0u64);
        let mut paired_ok = true;
        let mut p_model = 0.0;
        for rep in 0..4 {
            let seed = replicate_seed(20_240_601, rep);
            let plain = slotted(n, false, seed);
            p_model = collision_prob(&plain.mac_params().map_err(|e| e.to_string())?);
            let a = run(&plain).map_err(|e| e.to_string())?;
            let b = run(&slotted(n, true, seed)).map_err(|e| e.to_string())?;
            col += a.tx_collided;
            att += a.tx_attempts;
            col_j += b.tx_collided;
            paired_ok &= b.tx_collided < a.tx_collided;
        }
        let p_hat = col as f64 / att as f64;
        let se = (p_model * (1.0 - p_model) / att as f64).sqrt();
        let z = (p_hat - p_model) / se;
        ok &= z.abs() <= 3.0 && paired_ok;
        details.push(format!(
            "N={n} p {p_hat:.5} vs {p_model:.5} (z {z:+.2}), jitter {col_j} < {col}"
        ));
    }
    ensure(
        ok,
        format!(
            "{} (|z| <= 3, jitter fewer in every seed pair)",
            details.join("; ")
        ),
    )
}

fn alerts() -> Outcome {
    let base = trial(28.0);
    let r = run(&base).map_err(|e| e.to_string())?;
    let count = |k: RuleKind| r.alert_log.iter().filter(|a| a.rule == k).count();
    let (inact, fever) = (count(RuleKind::Inactivity), count(RuleKind::Fever));
    let mut ev = base.clone();
    ev.alerts.event_uplink = true;
    let e = run(&ev).map_err(|e| e.to_string())?;
    let worst = e
        .episodes
        .iter()
        .map(|o| o.latency_s.unwrap_or(f64::INFINITY))
        .chain(e.alert_log.iter().map(|a| a.latency_s))
        .fold(0.0, f64::max);
    ensure(
        r.alert_log.len() == 5 && inact == 3 && fever == 2 && e.alert_log.len() == 5 && worst <= 20.0,
        format!(
            "{} alerts ({inact} inactivity, {fever} fever); with event uplink {} alerts, worst latency {worst:.2} s (<= 20)",
            r.alert_log.len(),
            e.alert_log.len()
        ),
    )
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let radio = RadioParams::default();
    let mut eq_worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = EnergyProfile {
            i_sen_ma: rng.random_range(0.0..50.0),
            i_proc_ma: rng.random_range(0.0..20.0),
            i_tx_ma: rng.random_range(10.0..150.0),
            i_rx_ma: rng.random_range(0.0..20.0),
            i_slp_ma: rng.random_range(0.001..0.1),
            t_sen_s: rng.random_range(0.0..30.0),
            t_proc_s: rng.random_range(0.0..2.0),
            t_tx_s: None,
            t_rx_s: rng.random_range(0.0..1.0),
            report_interval_s: rng.random_range(60.0..3600.0),
            solar_credit_mj_per_cycle: 0.0,
        }
        .resolved(&radio)
        .map_err(|e| e.to_string())?;
        let bat = BatterySpec {
            capacity_mah: rng.random_range(500.0..5000.0),
            voltage_v: rng.random_range(3.0..4.2),
        };
        let a = lifetime_hours(&bat, avg_current_multi(&p).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let b = lifetime_from_energy(&p, &bat).map_err(|e| e.to_string())?;
        eq_worst = eq_worst.max((a - b).abs() / a);
    }

    let mut budget_worst: f64 = 0.0;
    for n in [1u32, 5, 50, 600] {
        let mac = MacParams {
            n_nodes: n,
            tau: 2e-4,
            k_microslots: 8,
            slot_s: 0.06,
        };
        for jitter in [false, true] {
            let b = loss_decomposition(0.03, &mac, jitter).map_err(|e| e.to_string())?;
            budget_worst = budget_worst.max((b.p_obs + b.p_col + b.p_succ - 1.0).abs());
        }
    }

    let mut sc = trial(3.0);
    sc.seed = 42;
    let a = run(&sc).map_err(|e| e.to_string())?;
    let b = run(&sc).map_err(|e| e.to_string())?;
    let conserved = a.fates.total() == a.generated
        && Fate::ALL.iter().map(|&f| a.fates.get(f)).sum::<u64>() == a.generated;
    let deterministic =
        a.to_json_pretty().ok() == b.to_json_pretty().ok() && a.battery_csv() == b.battery_csv();

    let scores: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..3.0)).collect();
    let labels: Vec<bool> = scores
        .iter()
        .map(|s| s + rng.random_range(-2.0..2.0) > 0.0)
        .collect();
    let base_auc = auroc(&scores, &labels).map_err(|e| e.to_string())?;
    let mapped: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() * 3.0 + 1.0).collect();
    let auc_invariant =
        (auroc(&mapped, &labels).map_err(|e| e.to_string())? - base_auc).abs() < 1e-15;

    let pts: Vec<Vec<f64>> = (0..300)
        .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
        .collect();
    let km = kmeans_cluster(&pts, 4, 3).map_err(|e| e.to_string())?;
    let km_monotone = km.wcss_history.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    let truth = TwoRegimeFit {
        pi_obs: 0.25,
        d_c_m: 6000.0,
        beta: 3.0,
        d_c_obs_m: 1800.0,
        beta_obs: 2.0,
    };
    let data: Vec<(f64, f64)> = (1..=40)
        .map(|i| f64::from(i) * 250.0)
        .map(|d| (d, success_two_regime(d, &truth)))
        .collect();
    let fit = fit_two_regime(&data).map_err(|e| e.to_string())?;
    let fit_err = data
        .iter()
        .map(|&(d, p)| (success_two_regime(d, &fit.fit) - p).abs())
        .fold(0.0, f64::max);

    ensure(
        eq_worst <= 1e-12 && budget_worst <= 1e-12 && conserved && deterministic && auc_invariant && km_monotone && fit_err <= 1e-6,
        format!(
            "energy forms agree {eq_worst:.1e}, budget sum {budget_worst:.1e}, conservation {conserved}, determinism {deterministic}, AUROC invariant {auc_invariant}, k-means monotone {km_monotone}, fit round-trip {fit_err:.1e}"
        ),
    )
}

fn not_reproducible() -> Outcome {
    let table = bundled::COMPARISON_REFERENCE
        .iter()
        .find(|(n, _)| *n == "table2.csv")
        .map(|(_, b)| *b)
        .ok_or("reference table missing")?;
    let expected = [
        "metric,agrotrack,smartfarm_ble,ruraltrack_gsm",
        "transmission_range_km,6.5,2.0,5.0",
        "battery_life_days,28,24,14",
        "data_reliability_pct,97.5,95.0,90.0",
        "alert_time_s,20,10,25",
        "usability_score,9.5,8.0,8.5",
    ];
    let lines: Vec<&str> = table.lines().collect();
    ensure(
        lines == expected,
        "untabulated curves and intermediate recovery points are covered by the shape checks above; comparison systems emitted verbatim as a static reference table".into(),
    )
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: 0 };
    suite.check(1, "baseline PDR", baseline_pdr);
    suite.check(2, "range", range);
    suite.check(3, "battery", battery);
    let base = bundled::scenario("scaling").expect("bundled scenario");
    let started = Instant::now();
    let rows = sweep(&base, &[50, 100, 200, 300, 400, 500, 600], 10);
    let sweep_s = started.elapsed().as_secs_f64();
    match rows {
        Ok(rows) => {
            suite.check(4, "scalability", || {
                scaling(&rows).map(|d| format!("{d}, sweep {sweep_s:.1} s"))
            });
            suite.check(5, "throughput", || throughput(&rows));
        }
        Err(e) => {
            suite.check(4, "scalability", || Err(e.to_string()));
            suite.check(5, "throughput", || Err("sweep failed".into()));
        }
    }
    suite.check(6, "robustness", robustness);
    suite.check(7, "analytic-simulation equivalence", equivalence);
    suite.check(8, "alerts", alerts);
    suite.check(9, "property suites", properties);
    suite.check(10, "documented non-reproducible items", not_reproducible);
    println!("{} of 10 criteria passed", 10 - suite.failed);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
