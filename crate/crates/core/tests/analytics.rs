use agrotrack::analytics::{
    auroc, evaluate_rules, kmeans_cluster, zscore_scores, AlertRule, RuleKind, RuleSet,
    TelemetrySample,
};
use agrotrack::channel::{fit_two_regime, success_two_regime, TwoRegimeFit};
use agrotrack::error::Error;
use agrotrack::geometry::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const TRUTH: TwoRegimeFit = TwoRegimeFit {
    pi_obs: 0.3,
    d_c_m: 4000.0,
    beta: 3.0,
    d_c_obs_m: 900.0,
    beta_obs: 2.0,
};

fn grid() -> Vec<f64> {
    (1..=40).map(|i| 150.0 * f64::from(i)).collect()
}

#[test]
fn noiseless_fit_recovers_curve() {
    let pts: Vec<_> = grid()
        .into_iter()
        .map(|d| (d, success_two_regime(d, &TRUTH)))
        .collect();
    let r = fit_two_regime(&pts).unwrap();
    let worst = pts
        .iter()
        .map(|&(d, p)| (success_two_regime(d, &r.fit) - p).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "max deviation {worst}");
}

#[test]
fn noisy_fit_residual_near_noise_variance() {
    let sigma = 0.02;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, sigma).unwrap();
    let pts: Vec<_> = grid()
        .into_iter()
        .map(|d| {
            (
                d,
                (success_two_regime(d, &TRUTH) + noise.sample(&mut rng)).clamp(0.0, 1.0),
            )
        })
        .collect();
    let r = fit_two_regime(&pts).unwrap();
    assert!(r.mse <= 4.0 * sigma * sigma, "mse {}", r.mse);
}

#[test]
fn fit_needs_five_points() {
    let pts: Vec<_> = grid()
        .into_iter()
        .take(4)
        .map(|d| (d, success_two_regime(d, &TRUTH)))
        .collect();
    assert!(matches!(
        fit_two_regime(&pts),
        Err(Error::InsufficientData { needed: 5, got: 4 })
    ));
}

#[test]
fn fit_rejects_out_of_range_points() {
    let mut pts: Vec<_> = grid().into_iter().map(|d| (d, 0.5)).collect();
    pts[3].1 = 1.2;
    assert!(matches!(fit_two_regime(&pts), Err(Error::Domain(_))));
    pts[3] = (-1.0, 0.5);
    assert!(matches!(fit_two_regime(&pts), Err(Error::Domain(_))));
}

#[test]
fn constant_data_fits_without_failure() {
    let pts: Vec<_> = grid().into_iter().map(|d| (d, 0.5)).collect();
    let r = fit_two_regime(&pts).unwrap();
    assert!(r.sse.is_finite());
    assert!(r.fit.validate().is_ok());
}

proptest! {
    #[test]
    fn auroc_invariant_under_monotone_transform(
        data in proptest::collection::vec((-5.0..5.0f64, any::<bool>()), 4..80),
        scale in 0.1..10.0f64,
        shift in -10.0..10.0f64,
    ) {
        let (scores, labels): (Vec<f64>, Vec<bool>) = data.into_iter().unzip();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let a = auroc(&scores, &labels).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| (s * scale + shift).exp()).collect();
        let b = auroc(&mapped, &labels).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((auroc(&flipped, &labels).unwrap() - (1.0 - a)).abs() <= 1e-12);
    }

    #[test]
    fn zscore_invariant_under_affine_rescaling(
        rows in proptest::collection::vec(proptest::collection::vec(-100.0..100.0f64, 3), 3..30),
        scale in 0.5..20.0f64,
        shift in -50.0..50.0f64,
    ) {
        let feats: Vec<(u32, Vec<f64>)> = rows.iter().cloned().enumerate().map(|(i, r)| (i as u32, r)).collect();
        let moved: Vec<(u32, Vec<f64>)> =
            feats.iter().map(|(i, r)| (*i, r.iter().map(|v| v * scale + shift).collect())).collect();
        match (zscore_scores(&feats).unwrap(), zscore_scores(&moved).unwrap()) {
            (Some(a), Some(b)) => {
                for ((_, x), (_, y)) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()), "{x} vs {y}");
                }
            }
            (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
        }
    }

    #[test]
    fn kmeans_objective_never_increases(seed: u64, k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        let r = kmeans_cluster(&pts, k, seed).unwrap();
        prop_assert!(r.wcss_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        prop_assert_eq!(r.assignment.len(), pts.len());
    }
}

#[test]
fn kmeans_separates_well_spaced_blobs() {
    let centers = [(0.0, 0.0), (50.0, 0.0), (0.0, 50.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let pts: Vec<Vec<f64>> = centers
        .iter()
        .flat_map(|&(x, y)| (0..30).map(move |_| (x, y)).collect::<Vec<_>>())
        .map(|(x, y)| vec![x + noise.sample(&mut rng), y + noise.sample(&mut rng)])
        .collect();
    let r = kmeans_cluster(&pts, 3, 1).unwrap();
    for blob in r.assignment.chunks(30) {
        assert!(blob.iter().all(|&a| a == blob[0]));
    }
    let mut labels: Vec<usize> = r.assignment.chunks(30).map(|b| b[0]).collect();
    labels.dedup();
    assert_eq!(labels.len(), 3);
}

#[test]
fn kmeans_rejects_more_clusters_than_points() {
    assert!(kmeans_cluster(&[vec![1.0], vec![2.0]], 3, 0).is_err());
}

fn sample(t: f64, temp_c: f64) -> TelemetrySample {
    TelemetrySample {
        animal_id: 7,
        sample_s: t,
        arrival_s: t + 2.0,
        position: Point::new(10.0, 10.0),
        temp_c,
        activity: 1.0,
        still_s: 0.0,
    }
}

#[test]
fn fever_fires_once_per_episode_and_rearms() {
    let temps = [38.5, 38.6, 40.8, 41.0, 40.9, 38.7, 38.6, 40.7, 38.5];
    let samples: Vec<_> = temps
        .iter()
        .enumerate()
        .map(|(i, &c)| sample(300.0 * i as f64, c))
        .collect();
    let rules = RuleSet::new(vec![AlertRule::Fever { threshold_c: 40.4 }]);
    let events = evaluate_rules(&samples, &rules, 1.0).unwrap();
    assert_eq!(events.len(), 2);
    assert!(events.iter().all(|e| e.rule == RuleKind::Fever));
    assert_eq!(events[0].trigger_s, 600.0);
    assert_eq!(events[1].trigger_s, 2100.0);
}

#[test]
fn out_of_order_samples_are_rejected() {
    let samples = vec![sample(600.0, 38.5), sample(300.0, 38.5)];
    let rules = RuleSet::new(vec![AlertRule::Fever { threshold_c: 40.4 }]);
    assert!(matches!(
        evaluate_rules(&samples, &rules, 1.0),
        Err(Error::Ordering(_))
    ));
}
