use agrotrack::channel::{
    link_margin, mean_success_over_shadowing, normal_cdf, obstruction_outage_prob,
    packet_success_prob, path_loss, snr, ChannelParams, LinkSample, RadioParams,
};
use agrotrack::energy::{
    avg_current_multi, avg_current_two_state, cycle_energy, lifetime_from_energy, lifetime_hours,
    time_on_air, BatterySpec, EnergyProfile,
};
use agrotrack::reliability::{
    budget_from_components, calibrate_tau, collision_prob, collision_prob_jitter,
    loss_decomposition, MacParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn profile() -> impl Strategy<Value = (EnergyProfile, BatterySpec)> {
    (
        (
            0.0..60.0f64,
            0.0..30.0f64,
            1.0..200.0f64,
            0.0..30.0f64,
            0.0..0.5f64,
        ),
        (0.0..60.0f64, 0.0..5.0f64, 0.001..2.0f64, 0.0..2.0f64),
        (130.0..7200.0f64, 100.0..10_000.0f64, 1.5..5.0f64),
    )
        .prop_map(|((is, ip, it, ir, isl), (ts, tp, tt, tr), (t, cap, v))| {
            let p = EnergyProfile {
                i_sen_ma: is,
                i_proc_ma: ip,
                i_tx_ma: it,
                i_rx_ma: ir,
                i_slp_ma: isl,
                t_sen_s: ts,
                t_proc_s: tp,
                t_tx_s: Some(tt),
                t_rx_s: tr,
                report_interval_s: t,
                solar_credit_mj_per_cycle: 0.0,
            };
            (
                p,
                BatterySpec {
                    capacity_mah: cap,
                    voltage_v: v,
                },
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lifetime_current_and_energy_forms_agree((p, bat) in profile()) {
        let a = lifetime_hours(&bat, avg_current_multi(&p).unwrap()).unwrap();
        let b = lifetime_from_energy(&p, &bat).unwrap();
        prop_assert!(((a - b) / a).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn cycle_energy_is_voltage_current_interval((p, bat) in profile()) {
        let e = cycle_energy(&p, &bat).unwrap();
        let i = avg_current_multi(&p).unwrap();
        prop_assert!((e / (bat.voltage_v * p.report_interval_s) - i).abs() <= 1e-12 * i.max(1.0));
    }

    #[test]
    fn merged_active_window_matches_two_state((p, _bat) in profile()) {
        let c = p.cycle_charge().unwrap();
        let t_act = p.active_time().unwrap();
        let i_act = if t_act > 0.0 { (c.total() - c.sleep) / t_act } else { 0.0 };
        let two = avg_current_two_state(i_act, t_act, p.i_slp_ma, p.sleep_time().unwrap()).unwrap();
        let multi = avg_current_multi(&p).unwrap();
        prop_assert!((two - multi).abs() <= 1e-12 * multi.max(1.0));
    }
}

proptest! {
    #[test]
    fn path_loss_monotone_and_obstruction_additive(d in 1.0..20_000.0f64, dd in 0.1..5_000.0f64, shadow in -20.0..20.0f64) {
        let c = ChannelParams::default();
        let near = path_loss(&LinkSample { distance_m: d, obstructed: false, shadow_db: shadow }, &c).unwrap();
        let far = path_loss(&LinkSample { distance_m: d + dd, obstructed: false, shadow_db: shadow }, &c).unwrap();
        let obs = path_loss(&LinkSample { distance_m: d, obstructed: true, shadow_db: shadow }, &c).unwrap();
        prop_assert!(far > near);
        prop_assert!((obs - near - c.obstruction_loss_db).abs() < 1e-9);
    }

    #[test]
    fn margin_and_snr_fall_one_for_one(pl in 60.0..180.0f64, extra in 0.0..30.0f64) {
        let (r, c) = (RadioParams::default(), ChannelParams::default());
        prop_assert!((link_margin(pl, &r, &c) - link_margin(pl + extra, &r, &c) - extra).abs() < 1e-9);
        prop_assert!((snr(pl, &r) - snr(pl + extra, &r) - extra).abs() < 1e-9);
    }

    #[test]
    fn success_monotone_in_snr(s in -40.0..40.0f64, ds in 0.0..20.0f64, g in -20.0..0.0f64, a in 0.1..5.0f64) {
        prop_assert!(packet_success_prob(s + ds, g, a) >= packet_success_prob(s, g, a));
    }

    #[test]
    fn collision_models_bounded_and_ordered(n in 1u32..1000, tau in 0.0..1.0f64, k in 1u32..32) {
        let p = MacParams { n_nodes: n, tau, k_microslots: k, slot_s: 0.06 };
        let plain = collision_prob(&p);
        let jit = collision_prob_jitter(&p);
        prop_assert!((0.0..=1.0).contains(&plain) && (0.0..=1.0).contains(&jit));
        prop_assert!(jit <= plain + 1e-15);
    }

    #[test]
    fn reliability_budget_sums_to_one(p_obs in 0.0..0.5f64, n in 1u32..300, tau in 0.0..1e-3f64, jitter: bool) {
        let mac = MacParams { n_nodes: n, tau, k_microslots: 8, slot_s: 0.06 };
        let b = loss_decomposition(p_obs, &mac, jitter).unwrap();
        prop_assert!((b.p_obs + b.p_col + b.p_succ - 1.0).abs() <= 1e-12);
        let direct = budget_from_components(b.p_obs, b.p_col).unwrap();
        prop_assert!((direct.p_succ - b.p_succ).abs() <= 1e-15);
    }

    #[test]
    fn tau_calibration_round_trip(target in 0.0..0.5f64, n in 2u32..600, k in 1u32..16) {
        let tau = match calibrate_tau(target, n, k) {
            Ok(t) => t,
            Err(agrotrack::error::Error::Infeasible(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let p = collision_prob_jitter(&MacParams { n_nodes: n, tau, k_microslots: k, slot_s: 1.0 });
        prop_assert!((p - target).abs() <= 1e-12);
    }
}

/// Monte Carlo over the shadowing draw against the quadrature.
#[test]
fn shadowing_average_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (gamma, alpha) = (-7.5, 1.5);
    for &(mean, sigma) in &[(-7.5, 6.0), (0.0, 6.0), (-15.0, 4.0), (5.0, 8.0)] {
        let normal = Normal::new(mean, sigma).unwrap();
        let n = 200_000;
        let mc = (0..n)
            .map(|_| packet_success_prob(normal.sample(&mut rng), gamma, alpha))
            .sum::<f64>()
            / n as f64;
        let quad = mean_success_over_shadowing(mean, sigma, gamma, alpha);
        assert!(
            (mc - quad).abs() <= 0.005,
            "mean {mean}: mc {mc} quad {quad}"
        );
    }
}

#[test]
fn outage_matches_standard_normal() {
    for z in [-2.0, -1.0, 0.0, 0.5, 2.5] {
        let p = obstruction_outage_prob(-7.5 + z * 6.0, 6.0, -7.5);
        assert!((p - normal_cdf(-z)).abs() < 1e-12);
    }
    assert!((normal_cdf(-1.0) - 0.158_655_253_931_457).abs() < 1e-9);
}

#[test]
fn airtime_reference_values() {
    let mut r = RadioParams::default();
    assert!((time_on_air(&r).unwrap() - 0.056_576).abs() < 1e-12);
    r.spreading_factor = 12;
    // 40.25 symbols of 32.768 ms with low-data-rate optimisation
    assert!((time_on_air(&r).unwrap() - 1.318_912).abs() < 1e-9);
    r.bandwidth_hz = 250_000;
    r.spreading_factor = 7;
    let half = time_on_air(&r).unwrap();
    assert!((half - 0.056_576 / 2.0).abs() < 1e-12);
}

#[test]
fn sleep_only_profile_lasts_capacity_over_current() {
    let p = EnergyProfile {
        i_sen_ma: 0.0,
        i_proc_ma: 0.0,
        i_tx_ma: 0.0,
        i_rx_ma: 0.0,
        i_slp_ma: 0.01,
        t_sen_s: 0.0,
        t_proc_s: 0.0,
        t_tx_s: Some(0.0),
        t_rx_s: 0.0,
        ..EnergyProfile::default()
    };
    let h = lifetime_from_energy(&p, &BatterySpec::default()).unwrap();
    assert!((h - 3.0e5).abs() < 1e-6);
}
