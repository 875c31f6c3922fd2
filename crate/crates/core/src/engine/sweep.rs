//! Replicated runs over herd sizes and gateway-failure counts.
//!
//! Runs execute in parallel on the current rayon pool; results are always
//! assembled in (parameter, replicate) order so output never depends on
//! completion order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::MetricsReport;
use super::scenario::Scenario;
use super::sim::run;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::{derive_seed, Stream};

/// Seed of replicate `rep`; shared across sweep points so they see common random numbers.
pub fn replicate_seed(base_seed: u64, rep: u32) -> u64 {
    derive_seed(base_seed, u64::from(rep), Stream::Replicate)
}

/// Copy of `base` with `n` animals on a field scaled to keep the base head density.
/// Field, obstructions and gateways scale about the field centroid; herd sizes at
/// or below the base count keep the base geometry.
pub fn scale_for_herd(base: &Scenario, n: u32) -> Scenario {
    let mut s = base.clone();
    s.herd.count = n;
    s.herd.initial_positions_m = None;
    s.episodes.retain(|e| e.animal < n);
    if n > base.herd.count {
        let f = (f64::from(n) / f64::from(base.herd.count)).sqrt();
        let c = base.field.boundary_m.centroid();
        s.field.boundary_m = base.field.boundary_m.scaled(c, f);
        s.field.obstructions_m = base
            .field
            .obstructions_m
            .iter()
            .map(|o| o.scaled(c, f))
            .collect();
        for g in &mut s.gateways {
            g.position_m = crate::geometry::scale_point(g.position_m, c, f);
        }
    }
    s
}

/// Run every scenario in parallel, returning reports in input order.
pub fn run_all(scenarios: &[Scenario]) -> Result<Vec<MetricsReport>> {
    scenarios
        .par_iter()
        .map(run)
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub replicates: u32,
    pub pdr: Stat,
    pub loss: Stat,
    pub throughput_msg_s: Stat,
    pub collision_rate: Stat,
    pub congestion_loss: Stat,
}

fn check_replicates(replicates: u32) -> Result<()> {
    if replicates == 0 {
        return Err(Error::Validation(vec!["replicates must be >= 1".into()]));
    }
    Ok(())
}

/// Herd-size sweep. Replicate 0 of a single-count, single-replicate sweep uses
/// the base seed, so it reproduces a plain run.
pub fn sweep(base: &Scenario, counts: &[u32], replicates: u32) -> Result<Vec<SweepRow>> {
    check_replicates(replicates)?;
    if counts.is_empty() || counts.contains(&0) || counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation(vec![
            "counts must be positive and strictly ascending".into(),
        ]));
    }
    base.validate()?;
    let single = replicates == 1;
    let jobs: Vec<Scenario> = counts
        .iter()
        .flat_map(|&n| {
            (0..replicates).map(move |r| {
                let mut s = scale_for_herd(base, n);
                if !single {
                    s.seed = replicate_seed(base.seed, r);
                }
                s
            })
        })
        .collect();
    let reports = run_all(&jobs)?;
    Ok(counts
        .iter()
        .zip(reports.chunks(replicates as usize))
        .map(|(&n, reps)| {
            let col = |f: &dyn Fn(&MetricsReport) -> f64| {
                Stat::of(&reps.iter().map(f).collect::<Vec<_>>())
            };
            SweepRow {
                n,
                replicates,
                pdr: col(&|r| r.pdr),
                loss: col(&|r| r.loss),
                throughput_msg_s: col(&|r| r.throughput_msg_s),
                collision_rate: col(&|r| r.collision_rate),
                congestion_loss: col(&|r| {
                    if r.generated == 0 {
                        0.0
                    } else {
                        r.fates.lost_congestion as f64 / r.generated as f64
                    }
                }),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub failures: u32,
    pub replicates: u32,
    pub recovery_ratio: Stat,
    pub pdr: Stat,
}

/// Copy of `base` with only the first `k` entries of its failure plan applied.
pub fn with_failures(base: &Scenario, k: usize) -> Scenario {
    let mut s = base.clone();
    s.failure_plan.truncate(k);
    s
}

/// Gateway-failure sweep. The scenario's failure plan lists outages in the
/// order they are switched on: row `k` applies the first `k` of them.
pub fn failure_sweep(
    base: &Scenario,
    max_failures: u32,
    replicates: u32,
) -> Result<Vec<FailureRow>> {
    check_replicates(replicates)?;
    base.validate()?;
    let m = max_failures as usize;
    let mut gws: Vec<usize> = base
        .failure_plan
        .iter()
        .take(m)
        .map(|o| o.gateway)
        .collect();
    gws.sort_unstable();
    gws.dedup();
    let mut problems = Vec::new();
    if base.gateways.len() < m + 1 {
        problems.push(format!(
            "{} failures need at least {} gateways, scenario has {}",
            m,
            m + 1,
            base.gateways.len()
        ));
    }
    if gws.len() < m {
        problems.push(format!(
            "failure_plan must name {m} distinct gateways, found {}",
            gws.len()
        ));
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    let jobs: Vec<Scenario> = (0..=m)
        .flat_map(|k| {
            (0..replicates).map(move |r| {
                let mut s = with_failures(base, k);
                s.seed = replicate_seed(base.seed, r);
                s
            })
        })
        .collect();
    let reports = run_all(&jobs)?;
    Ok(reports
        .chunks(replicates as usize)
        .enumerate()
        .map(|(k, reps)| FailureRow {
            failures: k as u32,
            replicates,
            recovery_ratio: Stat::of(&reps.iter().map(|r| r.recovery_ratio).collect::<Vec<_>>()),
            pdr: Stat::of(&reps.iter().map(|r| r.pdr).collect::<Vec<_>>()),
        })
        .collect())
}

pub fn loss_vs_n_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("n,loss_mean,loss_sd\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.n, r.loss.mean, r.loss.sd));
    }
    s
}

pub fn throughput_vs_n_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("n,throughput_msg_s_mean,throughput_msg_s_sd\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{}\n",
            r.n, r.throughput_msg_s.mean, r.throughput_msg_s.sd
        ));
    }
    s
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(
        "n,replicates,pdr_mean,pdr_sd,loss_mean,loss_sd,throughput_msg_s_mean,throughput_msg_s_sd,collision_rate_mean,congestion_loss_mean\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.replicates,
            r.pdr.mean,
            r.pdr.sd,
            r.loss.mean,
            r.loss.sd,
            r.throughput_msg_s.mean,
            r.throughput_msg_s.sd,
            r.collision_rate.mean,
            r.congestion_loss.mean
        ));
    }
    s
}

pub fn failures_csv(rows: &[FailureRow]) -> String {
    let mut s = String::from("failures,recovery_ratio,recovery_ratio_sd,pdr,replicates\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.failures, r.recovery_ratio.mean, r.recovery_ratio.sd, r.pdr.mean, r.replicates
        ));
    }
    s
}

/// Gateway layout used by the bundled multi-gateway scenarios: one at the
/// field centroid plus one at the centroid of each bounding-box quadrant.
pub fn quadrant_gateways(field: &crate::geometry::Polygon) -> Vec<Point> {
    let (lo, hi) = field.bounds();
    let c = field.centroid();
    let qx = [(lo.x + c.x) / 2.0, (c.x + hi.x) / 2.0];
    let qy = [(lo.y + c.y) / 2.0, (c.y + hi.y) / 2.0];
    vec![
        c,
        Point::new(qx[0], qy[0]),
        Point::new(qx[1], qy[0]),
        Point::new(qx[1], qy[1]),
        Point::new(qx[0], qy[1]),
    ]
}
