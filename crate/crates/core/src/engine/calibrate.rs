//! Fit free scenario constants to target metrics.
//!
//! Each calibration bisects one absolute parameter over fixed bounds using a
//! fixed set of replicate seeds, so the search is deterministic and re-running
//! it on its own output reproduces that output. Results are emitted as
//! scenario overlays.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::scenario::Scenario;
use super::sweep::{replicate_seed, run_all, scale_for_herd, with_failures};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

const BISECTION_STEPS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub parameter: String,
    pub value: f64,
    pub target: f64,
    pub achieved: f64,
    pub overlay: Value,
}

fn mean_over_seeds(
    base: &Scenario,
    seeds: u32,
    metric: impl Fn(&super::MetricsReport) -> f64,
) -> Result<f64> {
    let jobs: Vec<Scenario> = (0..seeds)
        .map(|r| {
            let mut s = base.clone();
            s.seed = replicate_seed(base.seed, r);
            s
        })
        .collect();
    let reports = run_all(&jobs)?;
    Ok(reports.iter().map(metric).sum::<f64>() / reports.len() as f64)
}

/// Bisect `f(x) = target` for `f` monotone on `[lo, hi]`. `increasing` gives the
/// direction. Returns the bracket end on the target's safe side.
fn bisect(
    mut lo: f64,
    mut hi: f64,
    target: f64,
    increasing: bool,
    steps: usize,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    let (below, above) = if increasing {
        (f_lo, f_hi)
    } else {
        (f_hi, f_lo)
    };
    if !(below <= target && target <= above) {
        return Err(Error::Calibration(format!(
            "target {target} outside achievable range [{}, {}] over bounds [{lo}, {hi}]",
            below.min(above),
            below.max(above)
        )));
    }
    let (mut v_lo, mut v_hi) = (f_lo, f_hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if (v < target) == increasing {
            lo = mid;
            v_lo = v;
        } else {
            hi = mid;
            v_hi = v;
        }
    }
    // side where the metric meets or beats the target
    Ok(if increasing { (hi, v_hi) } else { (lo, v_lo) })
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

/// Polygon rescaled about its centroid to the given area, snapped to 1 mm.
fn with_area(poly: &Polygon, area_m2: f64) -> Polygon {
    let c = poly.centroid();
    let f = (area_m2 / poly.area()).sqrt();
    Polygon::new(
        poly.scaled(c, f)
            .vertices
            .iter()
            .map(|p| Point::new(round_to(p.x, 1e-3), round_to(p.y, 1e-3)))
            .collect(),
    )
}

/// Size the first obstruction so the mean PDR over `seeds` replicates reaches
/// `target_pdr` (larger obstruction, lower PDR).
pub fn calibrate_obstruction(base: &Scenario, target_pdr: f64, seeds: u32) -> Result<Calibration> {
    base.validate()?;
    let Some(obs) = base.field.obstructions_m.first().cloned() else {
        return Err(Error::Calibration(
            "scenario has no obstruction to size".into(),
        ));
    };
    let field = &base.field.boundary_m;
    let fits = |area: f64| {
        with_area(&obs, area)
            .vertices
            .iter()
            .all(|&p| field.contains(p))
    };
    // largest area that still fits inside the field
    let (mut lo, mut hi) = (1.0, field.area());
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let max_area = lo.floor();
    let scenario_for = |area: f64| {
        let mut s = base.clone();
        s.field.obstructions_m[0] = with_area(&obs, round_to(area, 1.0).max(1.0));
        s
    };
    let (area, achieved) = bisect(1.0, max_area, target_pdr, false, BISECTION_STEPS, |a| {
        mean_over_seeds(&scenario_for(a), seeds, |r| r.pdr)
    })?;
    let area = round_to(area, 1.0).max(1.0);
    let s = scenario_for(area);
    let mut obstructions = base.field.obstructions_m.clone();
    obstructions[0] = s.field.obstructions_m[0].clone();
    Ok(Calibration {
        parameter: "field.obstructions_m[0] area_m2".into(),
        value: area,
        target: target_pdr,
        achieved,
        overlay: json!({ "field": { "obstructions_m": obstructions } }),
    })
}

/// Cloud service rate giving `target_msg_s` mean throughput at herd size `n`.
pub fn calibrate_cloud_rate(
    base: &Scenario,
    n: u32,
    target_msg_s: f64,
    seeds: u32,
) -> Result<Calibration> {
    base.validate()?;
    let scaled = scale_for_herd(base, n);
    let scenario_for = |rate: f64| {
        let mut s = scaled.clone();
        s.cloud.service_rate_msg_s = round_to(rate, 0.01);
        s
    };
    let (rate, achieved) = bisect(1.0, 2000.0, target_msg_s, true, BISECTION_STEPS, |r| {
        mean_over_seeds(&scenario_for(r), seeds, |m| m.throughput_msg_s)
    })?;
    let rate = round_to(rate, 0.01);
    Ok(Calibration {
        parameter: "cloud.service_rate_msg_s".into(),
        value: rate,
        target: target_msg_s,
        achieved,
        overlay: json!({ "cloud": { "service_rate_msg_s": rate } }),
    })
}

/// Smallest node buffer whose mean recovery ratio with the first `failures`
/// outages applied reaches `target_recovery`.
pub fn calibrate_buffer(
    base: &Scenario,
    failures: usize,
    target_recovery: f64,
    seeds: u32,
) -> Result<Calibration> {
    base.validate()?;
    let failed = with_failures(base, failures);
    let eval = |b: u32| {
        let mut s = failed.clone();
        s.node_buffer = b;
        mean_over_seeds(&s, seeds, |m| m.recovery_ratio)
    };
    let (mut lo, mut hi) = (0u32, 1u32);
    let mut v_hi = eval(hi)?;
    while v_hi < target_recovery {
        if hi >= 1 << 16 {
            return Err(Error::Calibration(format!(
                "recovery {v_hi:.4} with a {hi}-slot buffer stays below target {target_recovery}"
            )));
        }
        lo = hi;
        hi *= 2;
        v_hi = eval(hi)?;
    }
    if eval(0)? >= target_recovery {
        hi = 0;
        v_hi = eval(0)?;
    } else {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let v = eval(mid)?;
            if v >= target_recovery {
                hi = mid;
                v_hi = v;
            } else {
                lo = mid;
            }
        }
    }
    Ok(Calibration {
        parameter: "node_buffer".into(),
        value: f64::from(hi),
        target: target_recovery,
        achieved: v_hi,
        overlay: json!({ "node_buffer": hi }),
    })
}
