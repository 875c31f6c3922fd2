//! Cloud-side analytics over delivered telemetry.

mod alerts;
mod kmeans;
mod outliers;
mod roc;

pub use alerts::{
    alert_latency, evaluate_rules, next_uplink_wait, AlertEvent, AlertRule, PipelineDelays,
    RuleKind, RuleSet, TelemetrySample,
};
pub use kmeans::{kmeans_cluster, standardize, KMeansResult};
pub use outliers::{zscore_outliers, zscore_scores};
pub use roc::{auroc, roc_csv, roc_curve};

use serde::{Deserialize, Serialize};

/// Per-animal aggregates over an observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorFeature {
    pub animal_id: u32,
    pub mean_activity: f64,
    pub activity_variance: f64,
    pub mean_temp_c: f64,
    pub distance_m: f64,
}

impl BehaviorFeature {
    pub fn vector(&self) -> Vec<f64> {
        vec![
            self.mean_activity,
            self.activity_variance,
            self.mean_temp_c,
            self.distance_m,
        ]
    }
}

/// Aggregate features per animal from a stream ordered by `(animal_id, sample_s)`.
pub fn behavior_features(samples: &[TelemetrySample]) -> Vec<BehaviorFeature> {
    let mut out: Vec<BehaviorFeature> = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        let id = samples[i].animal_id;
        let j = samples[i..]
            .iter()
            .position(|s| s.animal_id != id)
            .map_or(samples.len(), |k| i + k);
        let chunk = &samples[i..j];
        let n = chunk.len() as f64;
        let mean_a = chunk.iter().map(|s| s.activity).sum::<f64>() / n;
        let var_a = chunk
            .iter()
            .map(|s| (s.activity - mean_a).powi(2))
            .sum::<f64>()
            / n;
        let mean_t = chunk.iter().map(|s| s.temp_c).sum::<f64>() / n;
        let dist = chunk
            .windows(2)
            .map(|w| w[0].position.distance(w[1].position))
            .sum::<f64>();
        out.push(BehaviorFeature {
            animal_id: id,
            mean_activity: mean_a,
            activity_variance: var_a.max(0.0),
            mean_temp_c: mean_t,
            distance_m: dist,
        });
        i = j;
    }
    out
}
