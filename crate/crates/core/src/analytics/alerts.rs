use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

/// One delivered measurement as seen by the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub animal_id: u32,
    /// When the collar took the measurement.
    pub sample_s: f64,
    /// When the cloud finished processing it.
    pub arrival_s: f64,
    pub position: Point,
    pub temp_c: f64,
    pub activity: f64,
    /// Continuous low-activity time measured on the collar, 0 when active.
    pub still_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Geofence,
    Inactivity,
    Fever,
}

impl RuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Geofence => "geofence",
            RuleKind::Inactivity => "inactivity",
            RuleKind::Fever => "fever",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlertRule {
    Geofence { boundary_m: Polygon },
    Inactivity { activity_floor: f64, window_s: f64 },
    Fever { threshold_c: f64 },
}

impl AlertRule {
    pub fn kind(&self) -> RuleKind {
        match self {
            AlertRule::Geofence { .. } => RuleKind::Geofence,
            AlertRule::Inactivity { .. } => RuleKind::Inactivity,
            AlertRule::Fever { .. } => RuleKind::Fever,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        match self {
            AlertRule::Geofence { boundary_m } if boundary_m.vertices.len() < 3 => {
                vec!["geofence polygon needs at least 3 vertices".into()]
            }
            AlertRule::Inactivity { window_s, .. } if !(*window_s > 0.0) => {
                vec![format!("inactivity window must be > 0 (got {window_s})")]
            }
            AlertRule::Fever { threshold_c } if !(30.0..=45.0).contains(threshold_c) => {
                vec![format!(
                    "fever threshold must be within 30-45 C (got {threshold_c})"
                )]
            }
            _ => Vec::new(),
        }
    }
}

/// Default rules plus per-animal replacements (matched by rule kind).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<AlertRule>,
    pub overrides: BTreeMap<u32, Vec<AlertRule>>,
}

impl RuleSet {
    pub fn new(rules: Vec<AlertRule>) -> Self {
        Self {
            rules,
            overrides: BTreeMap::new(),
        }
    }

    pub fn rules_for(&self, animal: u32) -> Vec<AlertRule> {
        let Some(over) = self.overrides.get(&animal) else {
            return self.rules.clone();
        };
        let mut out: Vec<AlertRule> = self
            .rules
            .iter()
            .filter(|r| over.iter().all(|o| o.kind() != r.kind()))
            .cloned()
            .collect();
        out.extend(over.iter().cloned());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v: Vec<String> = self
            .rules
            .iter()
            .chain(self.overrides.values().flatten())
            .flat_map(AlertRule::violations)
            .collect();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub animal_id: u32,
    pub rule: RuleKind,
    pub trigger_s: f64,
    pub detection_s: f64,
    pub delivery_s: f64,
    pub latency_s: f64,
}

enum Tracker {
    Geofence {
        boundary: Polygon,
        armed: bool,
    },
    Inactivity {
        floor: f64,
        window: f64,
        since: Option<f64>,
        armed: bool,
    },
    Fever {
        threshold: f64,
        armed: bool,
    },
}

impl Tracker {
    fn new(rule: AlertRule) -> Self {
        match rule {
            AlertRule::Geofence { boundary_m } => Tracker::Geofence {
                boundary: boundary_m,
                armed: true,
            },
            AlertRule::Inactivity {
                activity_floor,
                window_s,
            } => Tracker::Inactivity {
                floor: activity_floor,
                window: window_s,
                since: None,
                armed: true,
            },
            AlertRule::Fever { threshold_c } => Tracker::Fever {
                threshold: threshold_c,
                armed: true,
            },
        }
    }

    /// Returns the trigger time when this sample opens a new episode.
    fn observe(&mut self, s: &TelemetrySample) -> Option<(RuleKind, f64)> {
        match self {
            Tracker::Geofence { boundary, armed } => {
                // boundary points count as inside
                if boundary.contains(s.position) {
                    *armed = true;
                    None
                } else if std::mem::take(armed) {
                    Some((RuleKind::Geofence, s.sample_s))
                } else {
                    None
                }
            }
            Tracker::Inactivity {
                floor,
                window,
                since,
                armed,
            } => {
                if s.activity >= *floor {
                    *since = None;
                    *armed = true;
                    return None;
                }
                let onset = s.sample_s - s.still_s.max(0.0);
                let start = *since.get_or_insert(onset);
                let start = start.min(onset);
                *since = Some(start);
                if *armed && s.sample_s - start >= *window {
                    *armed = false;
                    Some((RuleKind::Inactivity, start + *window))
                } else {
                    None
                }
            }
            Tracker::Fever { threshold, armed } => {
                if s.temp_c < *threshold {
                    *armed = true;
                    None
                } else if std::mem::take(armed) {
                    Some((RuleKind::Fever, s.sample_s))
                } else {
                    None
                }
            }
        }
    }
}

/// Run every rule over a stream ordered per animal by sample time.
///
/// Each condition fires once per continuous episode and re-arms after the
/// animal recovers. `notify_delay_s` is the dispatch delay from detection to
/// the farmer.
pub fn evaluate_rules(
    samples: &[TelemetrySample],
    rules: &RuleSet,
    notify_delay_s: f64,
) -> Result<Vec<AlertEvent>> {
    rules.validate()?;
    let mut last_seen: BTreeMap<u32, f64> = BTreeMap::new();
    let mut trackers: BTreeMap<u32, Vec<Tracker>> = BTreeMap::new();
    let mut events = Vec::new();
    for s in samples {
        if let Some(&prev) = last_seen.get(&s.animal_id) {
            if s.sample_s < prev {
                return Err(Error::Ordering(format!(
                    "animal {} sample at {} s follows {} s",
                    s.animal_id, s.sample_s, prev
                )));
            }
        }
        last_seen.insert(s.animal_id, s.sample_s);
        let ts = trackers.entry(s.animal_id).or_insert_with(|| {
            rules
                .rules_for(s.animal_id)
                .into_iter()
                .map(Tracker::new)
                .collect()
        });
        for t in ts.iter_mut() {
            if let Some((rule, trigger_s)) = t.observe(s) {
                let detection_s = s.arrival_s.max(trigger_s);
                let delivery_s = detection_s + notify_delay_s;
                events.push(AlertEvent {
                    animal_id: s.animal_id,
                    rule,
                    trigger_s,
                    detection_s,
                    delivery_s,
                    latency_s: delivery_s - trigger_s,
                });
            }
        }
    }
    events.sort_by(|a, b| {
        a.trigger_s
            .total_cmp(&b.trigger_s)
            .then(a.animal_id.cmp(&b.animal_id))
            .then(a.rule.cmp(&b.rule))
    });
    Ok(events)
}

/// Fixed delays between an anomaly and the farmer's notification.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineDelays {
    pub airtime_s: f64,
    pub backhaul_s: f64,
    pub cloud_processing_s: f64,
    pub notification_s: f64,
}

/// Time from `anomaly_s` until the next periodic uplink of a node with the
/// given phase and interval.
pub fn next_uplink_wait(anomaly_s: f64, phase_s: f64, interval_s: f64) -> f64 {
    let rel = (anomaly_s - phase_s).rem_euclid(interval_s);
    if rel == 0.0 {
        0.0
    } else {
        interval_s - rel
    }
}

/// Wait for the uplink plus airtime, backhaul, cloud processing and notification.
pub fn alert_latency(uplink_wait_s: f64, delays: &PipelineDelays) -> Result<f64> {
    let parts = [
        uplink_wait_s,
        delays.airtime_s,
        delays.backhaul_s,
        delays.cloud_processing_s,
        delays.notification_s,
    ];
    if parts.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::domain("pipeline delays must be >= 0"));
    }
    Ok(parts.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(animal: u32, t: f64, temp: f64, activity: f64) -> TelemetrySample {
        TelemetrySample {
            animal_id: animal,
            sample_s: t,
            arrival_s: t + 1.0,
            position: Point::new(10.0, 10.0),
            temp_c: temp,
            activity,
            still_s: 0.0,
        }
    }

    fn rules() -> RuleSet {
        RuleSet::new(vec![
            AlertRule::Geofence {
                boundary_m: Polygon::rect(0.0, 0.0, 100.0, 100.0),
            },
            AlertRule::Inactivity {
                activity_floor: 0.05,
                window_s: 3600.0,
            },
            AlertRule::Fever { threshold_c: 39.5 },
        ])
    }

    #[test]
    fn healthy_stream_is_silent() {
        let s: Vec<_> = (0..500)
            .map(|i| sample(0, i as f64 * 300.0, 38.6, 0.4))
            .collect();
        assert!(evaluate_rules(&s, &rules(), 0.0).unwrap().is_empty());
    }

    #[test]
    fn fever_fires_once_per_episode_and_rearms() {
        let mut s = Vec::new();
        for i in 0..40 {
            let t = i as f64 * 300.0;
            let temp = if (5..10).contains(&i) || (20..22).contains(&i) {
                40.5
            } else {
                38.6
            };
            s.push(sample(3, t, temp, 0.4));
        }
        let ev = evaluate_rules(&s, &rules(), 2.0).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].trigger_s, 1500.0);
        assert_eq!(ev[0].latency_s, 3.0);
        assert_eq!(ev[1].trigger_s, 6000.0);
    }

    #[test]
    fn inactivity_needs_full_window() {
        let mut s = Vec::new();
        for i in 0..60 {
            let t = i as f64 * 300.0;
            // 11 low samples span 3000 s: not enough; later 14 low samples do fire
            let low = (5..16).contains(&i) || (30..44).contains(&i);
            s.push(sample(1, t, 38.6, if low { 0.02 } else { 0.5 }));
        }
        let ev = evaluate_rules(&s, &rules(), 0.0).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].rule, RuleKind::Inactivity);
        assert_eq!(ev[0].trigger_s, 9000.0 + 3600.0);
        assert!(ev[0].trigger_s <= ev[0].detection_s && ev[0].detection_s <= ev[0].delivery_s);
    }

    #[test]
    fn collar_still_time_backdates_onset() {
        let mut s = sample(2, 5000.0, 38.6, 0.02);
        s.still_s = 3600.0;
        let ev = evaluate_rules(&[s], &rules(), 0.0).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].trigger_s, 5000.0);
    }

    #[test]
    fn boundary_position_is_inside() {
        let mut s = sample(0, 0.0, 38.6, 0.5);
        s.position = Point::new(100.0, 50.0);
        assert!(evaluate_rules(&[s], &rules(), 0.0).unwrap().is_empty());
        s.position = Point::new(100.5, 50.0);
        assert_eq!(
            evaluate_rules(&[s], &rules(), 0.0).unwrap()[0].rule,
            RuleKind::Geofence
        );
    }

    #[test]
    fn unordered_stream_is_rejected() {
        let s = [sample(0, 600.0, 38.6, 0.5), sample(0, 300.0, 38.6, 0.5)];
        assert!(matches!(
            evaluate_rules(&s, &rules(), 0.0),
            Err(Error::Ordering(_))
        ));
        // interleaving across animals is fine
        let ok = [sample(0, 600.0, 38.6, 0.5), sample(1, 300.0, 38.6, 0.5)];
        assert!(evaluate_rules(&ok, &rules(), 0.0).is_ok());
    }

    #[test]
    fn per_animal_override_replaces_same_kind() {
        let mut rs = rules();
        rs.overrides
            .insert(7, vec![AlertRule::Fever { threshold_c: 38.0 }]);
        let ev = evaluate_rules(&[sample(7, 0.0, 38.6, 0.5)], &rs, 0.0).unwrap();
        assert_eq!(ev.len(), 1);
        assert!(evaluate_rules(&[sample(6, 0.0, 38.6, 0.5)], &rs, 0.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn rule_validation() {
        let bad = RuleSet::new(vec![AlertRule::Fever { threshold_c: 50.0 }]);
        assert!(bad.validate().is_err());
        let bad = RuleSet::new(vec![AlertRule::Inactivity {
            activity_floor: 0.05,
            window_s: 0.0,
        }]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn latency_examples() {
        let airtime = 0.056576;
        let zero = PipelineDelays {
            airtime_s: airtime,
            ..PipelineDelays::default()
        };
        assert_eq!(
            alert_latency(next_uplink_wait(600.0, 0.0, 300.0), &zero).unwrap(),
            airtime
        );
        let calibrated = PipelineDelays {
            airtime_s: airtime,
            backhaul_s: 1.0,
            cloud_processing_s: 0.5,
            notification_s: 5.0,
        };
        let just_before = next_uplink_wait(599.0, 0.0, 300.0);
        assert!(alert_latency(just_before, &calibrated).unwrap() <= 20.0);
        // worst case: anomaly right after an uplink waits a whole interval
        let just_after = next_uplink_wait(600.001, 0.0, 300.0);
        let worst = alert_latency(just_after, &calibrated).unwrap();
        assert!((worst - (300.0 + airtime + 6.5)).abs() < 0.01);
        assert!(alert_latency(-1.0, &calibrated).is_err());
    }
}
