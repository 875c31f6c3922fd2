use agrotrack::bundled;
use agrotrack::channel::ReceptionModel;
use agrotrack::engine::calibrate::calibrate_obstruction;
use agrotrack::engine::scenario::{GatewaySpec, MobilityModel, Outage, Timing};
use agrotrack::engine::sweep::{quadrant_gateways, with_failures};
use agrotrack::engine::{failure_sweep, run, sweep, Fate, MetricsReport, Scenario};
use agrotrack::geometry::{Point, Polygon};
use proptest::prelude::*;

fn small(n: u32, days: f64) -> Scenario {
    let mut s = bundled::scenario("trial_baseline").unwrap();
    s.herd.count = n;
    s.episodes.clear();
    s.duration_s = days * 86_400.0;
    s
}

fn conserved(r: &MetricsReport) -> bool {
    Fate::ALL.iter().map(|&f| r.fates.get(f)).sum::<u64>() == r.generated
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fates_conserved_on_random_setups(
        n in 1u32..40,
        hours in 1.0..30.0f64,
        seed: u64,
        slotted: bool,
        jitter: bool,
        capture: bool,
        buffer in 0u32..5,
        outage in proptest::option::of((0.0..20_000.0f64, 600.0..20_000.0f64)),
    ) {
        let mut s = small(n, hours / 24.0);
        s.seed = seed;
        s.mac.timing = if slotted { Timing::Slotted } else { Timing::Continuous };
        s.mac.jitter = jitter;
        s.mac.capture_threshold_db = capture.then_some(6.0);
        s.node_buffer = buffer;
        if let Some((start, len)) = outage {
            s.failure_plan = vec![Outage { gateway: 0, start_s: start, end_s: start + len }];
        }
        let r = run(&s).unwrap();
        prop_assert!(conserved(&r));
        // jitter may push the final cycle past the horizon
        let slack = if jitter { s.mac.jitter_window_s } else { 0.0 };
        let interval = s.energy.report_interval_s;
        let lo = u64::from(n) * ((s.duration_s - slack) / interval).floor() as u64;
        let hi = u64::from(n) * (s.duration_s / interval).ceil() as u64;
        prop_assert!((lo..=hi).contains(&r.generated), "{} not in {lo}..={hi}", r.generated);
        prop_assert!((0.0..=1.0).contains(&r.pdr));
        prop_assert!((0.0..=1.0).contains(&r.recovery_ratio));
    }
}

#[test]
fn identical_seed_gives_identical_report() {
    let s = small(15, 5.0);
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(a.to_json_pretty().unwrap(), b.to_json_pretty().unwrap());
    let mut other = s.clone();
    other.seed ^= 1;
    assert_ne!(
        run(&other).unwrap().to_json_pretty().unwrap(),
        a.to_json_pretty().unwrap()
    );
}

#[test]
fn adjacent_gateway_hard_threshold_is_lossless() {
    let mut s = small(1, 7.0);
    s.field.obstructions_m.clear();
    s.reception = ReceptionModel::HardThreshold;
    s.channel.shadowing_sigma_db = 0.0;
    s.mobility.model = MobilityModel::Static;
    let p = s.field.boundary_m.centroid();
    s.herd.initial_positions_m = Some(vec![p]);
    s.gateways = vec![GatewaySpec::at(p.x + s.channel.d0_m, p.y)];
    let r = run(&s).unwrap();
    assert_eq!(r.pdr, 1.0);
    assert_eq!(r.fates.get(Fate::Delivered), r.generated);
}

#[test]
fn deep_obstruction_blocks_sole_gateway() {
    let mut s = small(1, 3.0);
    s.channel.obstruction_loss_db = 60.0;
    s.mobility.model = MobilityModel::Static;
    let field = s.field.boundary_m.clone();
    let c = field.centroid();
    s.field.obstructions_m = vec![Polygon::rect(
        c.x - 20.0,
        c.y - 50.0,
        c.x - 10.0,
        c.y + 50.0,
    )];
    s.herd.initial_positions_m = Some(vec![c]);
    s.gateways = vec![GatewaySpec::at(c.x - 2800.0, c.y)];
    let r = run(&s).unwrap();
    assert!(r.pdr < 0.01, "pdr {}", r.pdr);
    assert_eq!(
        r.fates.get(Fate::LostObstruction),
        r.generated - r.fates.delivered_total()
    );
}

#[test]
fn unreachable_second_gateway_changes_nothing() {
    let mut one = small(1, 3.0);
    one.field.obstructions_m.clear();
    one.mobility.model = MobilityModel::Static;
    let c = one.field.boundary_m.centroid();
    one.herd.initial_positions_m = Some(vec![c]);
    one.gateways = vec![GatewaySpec::at(c.x + one.channel.d0_m, c.y)];
    let mut two = one.clone();
    two.gateways.push(GatewaySpec::at(c.x + 500_000.0, c.y));
    let (a, b) = (run(&one).unwrap(), run(&two).unwrap());
    assert_eq!(a.pdr, b.pdr);
    assert_eq!(a.generated, b.generated);
}

#[test]
fn forced_common_slot_without_capture_always_collides() {
    let mut s = small(2, 1.0);
    s.field.obstructions_m.clear();
    s.mac.timing = Timing::Slotted;
    s.mac.jitter = false;
    s.mac.capture_threshold_db = None;
    s.mac.slot_s = Some(s.energy.report_interval_s);
    let r = run(&s).unwrap();
    assert_eq!(r.tx_collided, r.tx_attempts);
    assert_eq!(r.fates.delivered_total(), 0);
    assert_eq!(r.fates.get(Fate::LostCollision), r.generated);
}

#[test]
fn single_count_sweep_equals_simulation() {
    let mut base = bundled::scenario("scaling").unwrap();
    base.duration_s = 300.0;
    let rows = sweep(&base, &[base.herd.count], 1).unwrap();
    let r = run(&base).unwrap();
    assert_eq!(rows[0].loss.mean, r.loss);
    assert_eq!(rows[0].throughput_msg_s.mean, r.throughput_msg_s);
    assert_eq!(rows[0].pdr.mean, r.pdr);
}

#[test]
fn recovery_declines_with_failures_and_needs_buffer() {
    let mut base = bundled::scenario("robustness").unwrap();
    base.herd.count = 20;
    base.duration_s = 36_000.0;
    let rows = failure_sweep(&base, 4, 2).unwrap();
    assert_eq!(rows[0].recovery_ratio.mean, 1.0);
    assert!(rows
        .windows(2)
        .all(|w| w[1].recovery_ratio.mean <= w[0].recovery_ratio.mean));

    let mut unbuffered = with_failures(&base, 4);
    unbuffered.node_buffer = 0;
    let r = run(&unbuffered).unwrap();
    assert_eq!(r.fates.get(Fate::BufferedThenDelivered), 0);
    let buffered = run(&with_failures(&base, 4)).unwrap();
    assert!(buffered.recovery_ratio >= r.recovery_ratio);
}

#[test]
fn too_few_gateways_for_failure_count_is_rejected() {
    let mut base = bundled::scenario("robustness").unwrap();
    base.gateways.truncate(3);
    assert!(failure_sweep(&base, 4, 1).is_err());
}

#[test]
fn battery_series_tracks_closed_form() {
    let s = small(5, 7.0);
    let r = run(&s).unwrap();
    let i_avg =
        agrotrack::energy::avg_current_multi(&s.energy.resolved(&s.radio).unwrap()).unwrap();
    for p in r.battery_series.iter().filter(|p| p.time_s > 0.0) {
        let drawn = s.battery.capacity_mah - p.battery_mah;
        let expected = i_avg * p.time_s / 3600.0;
        assert!(
            (drawn / expected - 1.0).abs() < 0.01,
            "t {} drawn {drawn} expected {expected}",
            p.time_s
        );
    }
}

#[test]
fn animals_stay_in_field() {
    let s = small(15, 2.0);
    let r = run(&s).unwrap();
    let geofence = r
        .alert_log
        .iter()
        .filter(|a| a.rule == agrotrack::analytics::RuleKind::Geofence)
        .count();
    assert_eq!(geofence, 0);
}

#[test]
fn calibration_overlay_reproduces_runs() {
    let mut base = small(15, 2.0);
    base.field.obstructions_m = vec![Polygon::rect(40.0, 150.0, 60.0, 170.0)];
    let cal = calibrate_obstruction(&base, 0.985, 2).unwrap();
    let a = base.with_overlay(&cal.overlay).unwrap();
    let text = serde_json::to_string(&cal.overlay).unwrap();
    let b = base
        .with_overlay(&serde_json::from_str(&text).unwrap())
        .unwrap();
    assert_eq!(
        run(&a).unwrap().to_json_pretty().unwrap(),
        run(&b).unwrap().to_json_pretty().unwrap()
    );
}

#[test]
fn quadrant_layout_sits_inside_field() {
    let field = Polygon::rect(0.0, 0.0, 1000.0, 1000.0);
    let gws = quadrant_gateways(&field);
    assert_eq!(gws.len(), 5);
    assert!(gws.iter().all(|&g| field.contains(g)));
    assert!(gws.contains(&Point::new(500.0, 500.0)));
}
