//! Run outputs: per-fate accounting, time series and the alert log.

use serde::{Deserialize, Serialize};

use super::scenario::EpisodeKind;
use crate::analytics::AlertEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    Delivered,
    LostObstruction,
    LostSnr,
    LostCollision,
    /// Heard only by gateways with every demodulator busy or a full ingest queue.
    LostCongestion,
    BufferedThenDelivered,
    Expired,
}

impl Fate {
    pub const ALL: [Fate; 7] = [
        Fate::Delivered,
        Fate::LostObstruction,
        Fate::LostSnr,
        Fate::LostCollision,
        Fate::LostCongestion,
        Fate::BufferedThenDelivered,
        Fate::Expired,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Fate::Delivered => "delivered",
            Fate::LostObstruction => "lost_obstruction",
            Fate::LostSnr => "lost_snr",
            Fate::LostCollision => "lost_collision",
            Fate::LostCongestion => "lost_congestion",
            Fate::BufferedThenDelivered => "buffered_then_delivered",
            Fate::Expired => "expired",
        }
    }

    pub fn is_delivered(self) -> bool {
        matches!(self, Fate::Delivered | Fate::BufferedThenDelivered)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FateCounts {
    pub delivered: u64,
    pub lost_obstruction: u64,
    pub lost_snr: u64,
    pub lost_collision: u64,
    pub lost_congestion: u64,
    pub buffered_then_delivered: u64,
    pub expired: u64,
}

impl FateCounts {
    pub fn get(&self, f: Fate) -> u64 {
        match f {
            Fate::Delivered => self.delivered,
            Fate::LostObstruction => self.lost_obstruction,
            Fate::LostSnr => self.lost_snr,
            Fate::LostCollision => self.lost_collision,
            Fate::LostCongestion => self.lost_congestion,
            Fate::BufferedThenDelivered => self.buffered_then_delivered,
            Fate::Expired => self.expired,
        }
    }

    pub fn add(&mut self, f: Fate) {
        let slot = match f {
            Fate::Delivered => &mut self.delivered,
            Fate::LostObstruction => &mut self.lost_obstruction,
            Fate::LostSnr => &mut self.lost_snr,
            Fate::LostCollision => &mut self.lost_collision,
            Fate::LostCongestion => &mut self.lost_congestion,
            Fate::BufferedThenDelivered => &mut self.buffered_then_delivered,
            Fate::Expired => &mut self.expired,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        Fate::ALL.iter().map(|&f| self.get(f)).sum()
    }

    pub fn delivered_total(&self) -> u64 {
        self.delivered + self.buffered_then_delivered
    }

    /// Fraction of `generated` per fate, keyed by fate name in declaration order.
    pub fn fractions(&self, generated: u64) -> Vec<(String, f64)> {
        Fate::ALL
            .iter()
            .map(|&f| {
                let x = if generated == 0 {
                    0.0
                } else {
                    self.get(f) as f64 / generated as f64
                };
                (f.as_str().to_string(), x)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub time_s: f64,
    pub msg_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryPoint {
    pub time_s: f64,
    pub node: u32,
    pub battery_mah: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    pub lo_m: f64,
    pub hi_m: f64,
    pub attempts: u64,
    pub successes: u64,
}

impl DistanceBin {
    pub fn success_rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64)
    }
}

/// How an injected anomaly surfaced at the farmer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub animal_id: u32,
    pub kind: EpisodeKind,
    /// Instant the rule condition became true on the animal.
    pub onset_s: f64,
    pub delivery_s: Option<f64>,
    pub latency_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeEnergy {
    pub node: u32,
    pub battery_mah: f64,
    pub consumed_mah: f64,
    /// Lifetime extrapolated from the run's average drain.
    pub projected_lifetime_h: Option<f64>,
    pub depleted_at_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub duration_s: f64,
    pub nodes: u32,
    pub generated: u64,
    pub fates: FateCounts,
    pub pdr: f64,
    pub loss: f64,
    pub loss_by_cause: Vec<(String, f64)>,
    pub tx_attempts: u64,
    /// Transmissions destroyed by overlap at every gateway that could hear them.
    pub tx_collided: u64,
    pub collision_rate: f64,
    pub cloud_accepted: u64,
    pub cloud_dropped: u64,
    /// Mean cloud-processed messages per second after warm-up.
    pub throughput_msg_s: f64,
    pub throughput_series: Vec<ThroughputPoint>,
    pub outage_generated: u64,
    pub outage_recovered: u64,
    pub recovery_ratio: f64,
    pub battery_series: Vec<BatteryPoint>,
    pub energy: Vec<NodeEnergy>,
    pub alert_log: Vec<AlertEvent>,
    pub episodes: Vec<EpisodeOutcome>,
    pub distance_histogram: Vec<DistanceBin>,
    pub events_processed: u64,
}

impl MetricsReport {
    pub fn to_json_pretty(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Mean projected lifetime over nodes that drained anything.
    pub fn mean_projected_lifetime_h(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .energy
            .iter()
            .filter_map(|e| e.projected_lifetime_h)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn throughput_csv(&self) -> String {
        let mut s = String::from("time_s,throughput_msg_s\n");
        for p in &self.throughput_series {
            s.push_str(&format!("{},{}\n", p.time_s, p.msg_per_s));
        }
        s
    }

    pub fn battery_csv(&self) -> String {
        let mut s = String::from("time_s,node,battery_mah\n");
        for p in &self.battery_series {
            s.push_str(&format!("{},{},{}\n", p.time_s, p.node, p.battery_mah));
        }
        s
    }

    pub fn alerts_csv(&self) -> String {
        alerts_csv(&self.alert_log)
    }

    pub fn distance_csv(&self) -> String {
        let mut s = String::from("distance_lo_m,distance_hi_m,attempts,successes,success_rate\n");
        for b in &self.distance_histogram {
            let rate = b.success_rate().map_or(String::new(), |r| r.to_string());
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                b.lo_m, b.hi_m, b.attempts, b.successes, rate
            ));
        }
        s
    }

    pub fn episodes_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let mut s = String::from("animal_id,kind,onset_s,delivery_s,latency_s\n");
        for e in &self.episodes {
            let kind = match e.kind {
                EpisodeKind::Fever => "fever",
                EpisodeKind::Inactivity => "inactivity",
            };
            s.push_str(&format!(
                "{},{kind},{},{},{}\n",
                e.animal_id,
                e.onset_s,
                opt(e.delivery_s),
                opt(e.latency_s)
            ));
        }
        s
    }

    pub fn fates_csv(&self) -> String {
        let mut s = String::from("fate,count,fraction\n");
        for (name, frac) in &self.loss_by_cause {
            let f = Fate::ALL
                .iter()
                .find(|f| f.as_str() == name)
                .copied()
                .unwrap_or(Fate::Expired);
            s.push_str(&format!("{name},{},{frac}\n", self.fates.get(f)));
        }
        s
    }
}

pub fn alerts_csv(events: &[AlertEvent]) -> String {
    let mut s = String::from("animal_id,rule,trigger_s,detection_s,delivery_s,latency_s\n");
    for e in events {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.animal_id,
            e.rule.as_str(),
            e.trigger_s,
            e.detection_s,
            e.delivery_s,
            e.latency_s
        ));
    }
    s
}
