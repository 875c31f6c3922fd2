//! Declarative simulation input. Deserialised from JSON with unknown keys
//! rejected; every physical quantity carries its unit in the field name.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analytics::{AlertRule, RuleSet};
use crate::channel::{ChannelParams, RadioParams, ReceptionModel};
use crate::energy::{BatterySpec, EnergyProfile};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub field: FieldSpec,
    pub herd: HerdSpec,
    #[serde(default)]
    pub mobility: MobilitySpec,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub reception: ReceptionModel,
    #[serde(default)]
    pub energy: EnergyProfile,
    #[serde(default)]
    pub battery: BatterySpec,
    #[serde(default)]
    pub mac: MacConfig,
    pub gateways: Vec<GatewaySpec>,
    #[serde(default)]
    pub cloud: CloudSpec,
    #[serde(default)]
    pub failure_plan: Vec<Outage>,
    /// Buffered measurements each collar can hold while disconnected.
    #[serde(default)]
    pub node_buffer: u32,
    #[serde(default)]
    pub sensors: SensorSpec,
    #[serde(default)]
    pub alerts: AlertConfig,
    #[serde(default)]
    pub episodes: Vec<Episode>,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default)]
    pub limits: Limits,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub boundary_m: Polygon,
    #[serde(default)]
    pub obstructions_m: Vec<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HerdSpec {
    pub count: u32,
    /// Explicit starting positions; seeded uniform placement when absent.
    #[serde(default)]
    pub initial_positions_m: Option<Vec<Point>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityModel {
    #[default]
    RandomWaypoint,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySpec {
    pub model: MobilityModel,
    pub speed_min_m_s: f64,
    pub speed_max_m_s: f64,
    pub pause_min_s: f64,
    pub pause_max_s: f64,
}

impl Default for MobilitySpec {
    fn default() -> Self {
        Self {
            model: MobilityModel::RandomWaypoint,
            speed_min_m_s: 0.1,
            speed_max_m_s: 0.8,
            pause_min_s: 60.0,
            pause_max_s: 1800.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// Free-running schedules; overlap computed from airtime intervals.
    #[default]
    Continuous,
    /// Globally aligned slots of `slot_s`, one uniformly chosen slot per cycle.
    Slotted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacConfig {
    pub timing: Timing,
    pub jitter: bool,
    pub k_microslots: u32,
    /// Slot length for slotted timing; defaults to the packet airtime.
    pub slot_s: Option<f64>,
    /// Width of the uniform random offset added per cycle under continuous timing.
    pub jitter_window_s: f64,
    /// Orthogonal uplink channels; each transmission picks one uniformly.
    pub channels: u32,
    /// Power advantage needed to survive an overlap. `None` makes every overlap destructive.
    pub capture_threshold_db: Option<f64>,
    /// Gap between the regular uplink and a buffered retransmission.
    pub retransmit_gap_s: f64,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            timing: Timing::Continuous,
            jitter: true,
            k_microslots: 8,
            slot_s: None,
            jitter_window_s: 20.0,
            channels: 1,
            capture_threshold_db: Some(6.0),
            retransmit_gap_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewaySpec {
    pub position_m: Point,
    #[serde(default = "default_backhaul")]
    pub backhaul_delay_s: f64,
    #[serde(default = "default_ingest")]
    pub ingest_capacity_msg_s: f64,
    #[serde(default = "default_ingest_bound")]
    pub ingest_queue_bound: u32,
    /// Parallel demodulator paths; a packet arriving with all paths busy is not received.
    #[serde(default = "default_demodulators")]
    pub demodulators: u32,
}

fn default_backhaul() -> f64 {
    1.0
}
fn default_ingest() -> f64 {
    1000.0
}
fn default_ingest_bound() -> u32 {
    64
}
fn default_demodulators() -> u32 {
    8
}

impl GatewaySpec {
    pub fn at(x: f64, y: f64) -> Self {
        Self {
            position_m: Point::new(x, y),
            backhaul_delay_s: default_backhaul(),
            ingest_capacity_msg_s: default_ingest(),
            ingest_queue_bound: default_ingest_bound(),
            demodulators: default_demodulators(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudSpec {
    pub service_rate_msg_s: f64,
    pub queue_bound: u32,
    /// Dispatch delay from detection to the farmer (dashboard/SMS).
    pub notification_delay_s: f64,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self {
            service_rate_msg_s: 500.0,
            queue_bound: 1000,
            notification_delay_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outage {
    pub gateway: usize,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSpec {
    pub baseline_temp_c: f64,
    /// Spread of per-animal baseline temperatures.
    pub baseline_spread_c: f64,
    pub temp_noise_c: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            baseline_temp_c: 38.6,
            baseline_spread_c: 0.15,
            temp_noise_c: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlertConfig {
    pub fever_threshold_c: f64,
    pub inactivity_floor: f64,
    pub inactivity_window_s: f64,
    /// Alert on positions outside the field boundary.
    pub geofence: bool,
    /// Collar sends an immediate uplink when it detects an anomaly on board.
    pub event_uplink: bool,
    pub event_repeats: u32,
    pub event_repeat_spacing_s: f64,
    /// Collar suppresses normal samples, keeping one in `prefilter_keepalive_every`.
    pub edge_prefilter: bool,
    pub prefilter_keepalive_every: u32,
    #[serde(default)]
    pub per_animal: std::collections::BTreeMap<u32, Vec<AlertRule>>,
}

impl Default for AlertConfig {
    fn default() -> Self {
        Self {
            fever_threshold_c: 39.5,
            inactivity_floor: 0.05,
            inactivity_window_s: 3600.0,
            geofence: true,
            event_uplink: false,
            event_repeats: 2,
            event_repeat_spacing_s: 3.0,
            edge_prefilter: false,
            prefilter_keepalive_every: 12,
            per_animal: Default::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeKind {
    Inactivity,
    Fever,
}

/// Injected health anomaly: during `[start_s, start_s + duration_s)` the
/// animal's activity (inactivity) or body temperature (fever) sits at `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Episode {
    pub animal: u32,
    pub kind: EpisodeKind,
    pub start_s: f64,
    pub duration_s: f64,
    pub level: f64,
}

impl Episode {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSpec {
    /// Throughput is averaged over `[warmup_s, duration_s)`.
    pub warmup_s: f64,
    pub throughput_bucket_s: f64,
    pub battery_sample_s: f64,
    pub distance_bin_m: f64,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            warmup_s: 0.0,
            throughput_bucket_s: 3600.0,
            battery_sample_s: 86_400.0,
            distance_bin_m: 250.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    pub max_pending_events: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_pending_events: 5_000_000,
        }
    }
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(s)?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Validation(vec![e.to_string()]))
    }

    /// Deep-merge `overlay` (same schema, any subset) onto this scenario.
    pub fn with_overlay(&self, overlay: &Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overlay);
        Self::from_value(base)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn rule_set(&self) -> RuleSet {
        let a = &self.alerts;
        let mut rules = vec![
            AlertRule::Inactivity {
                activity_floor: a.inactivity_floor,
                window_s: a.inactivity_window_s,
            },
            AlertRule::Fever {
                threshold_c: a.fever_threshold_c,
            },
        ];
        if a.geofence {
            rules.insert(
                0,
                AlertRule::Geofence {
                    boundary_m: self.field.boundary_m.clone(),
                },
            );
        }
        RuleSet {
            rules,
            overrides: a.per_animal.clone(),
        }
    }

    /// Field-level violations; physics feasibility is checked separately.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let field = &self.field.boundary_m;
        if field.vertices.len() < 3 || !field.is_convex() {
            v.push("field.boundary_m must be a convex polygon with at least 3 vertices".into());
        }
        for (i, obs) in self.field.obstructions_m.iter().enumerate() {
            if obs.vertices.len() < 3 || !obs.is_convex() {
                v.push(format!(
                    "field.obstructions_m[{i}] must be a convex polygon"
                ));
            }
            if !obs.vertices.iter().all(|&p| field.contains(p)) {
                v.push(format!(
                    "field.obstructions_m[{i}] must lie inside the field"
                ));
            }
        }
        if self.herd.count < 1 {
            v.push("herd.count must be >= 1".into());
        }
        if let Some(pos) = &self.herd.initial_positions_m {
            if pos.len() != self.herd.count as usize {
                v.push(format!(
                    "herd.initial_positions_m has {} entries for {} animals",
                    pos.len(),
                    self.herd.count
                ));
            }
            if pos.iter().any(|&p| !field.contains(p)) {
                v.push("herd.initial_positions_m must lie inside the field".into());
            }
        }
        let m = &self.mobility;
        if !(m.speed_min_m_s >= 0.0 && m.speed_max_m_s >= m.speed_min_m_s) {
            v.push("mobility speed range must satisfy 0 <= min <= max".into());
        }
        if !(m.pause_min_s >= 0.0 && m.pause_max_s >= m.pause_min_s) {
            v.push("mobility pause range must satisfy 0 <= min <= max".into());
        }
        v.extend(self.radio.violations());
        v.extend(self.channel.violations());
        v.extend(self.energy.violations());
        v.extend(self.battery.violations());
        let mac = &self.mac;
        if mac.k_microslots < 1 {
            v.push("mac.k_microslots must be >= 1".into());
        }
        if mac.channels < 1 {
            v.push("mac.channels must be >= 1".into());
        }
        if mac.slot_s.is_some_and(|s| !(s > 0.0)) {
            v.push("mac.slot_s must be > 0".into());
        }
        if !(mac.jitter_window_s >= 0.0) || !(mac.retransmit_gap_s >= 0.0) {
            v.push("mac.jitter_window_s and mac.retransmit_gap_s must be >= 0".into());
        }
        if self.gateways.is_empty() {
            v.push("gateways must not be empty".into());
        }
        for (i, g) in self.gateways.iter().enumerate() {
            if !(g.ingest_capacity_msg_s > 0.0)
                || !(g.backhaul_delay_s >= 0.0)
                || g.ingest_queue_bound < 1
                || g.demodulators < 1
            {
                v.push(format!("gateways[{i}]: capacity, queue bound and demodulators must be > 0, backhaul >= 0"));
            }
        }
        if !(self.cloud.service_rate_msg_s > 0.0)
            || self.cloud.queue_bound < 1
            || !(self.cloud.notification_delay_s >= 0.0)
        {
            v.push(
                "cloud: service rate and queue bound must be > 0, notification delay >= 0".into(),
            );
        }
        for (i, o) in self.failure_plan.iter().enumerate() {
            if o.gateway >= self.gateways.len() {
                v.push(format!(
                    "failure_plan[{i}] names unknown gateway {}",
                    o.gateway
                ));
            }
            if !(o.start_s >= 0.0 && o.end_s > o.start_s) {
                v.push(format!(
                    "failure_plan[{i}] must satisfy 0 <= start_s < end_s"
                ));
            }
        }
        for (i, e) in self.episodes.iter().enumerate() {
            if e.animal >= self.herd.count {
                v.push(format!("episodes[{i}] names unknown animal {}", e.animal));
            }
            if !(e.duration_s > 0.0 && e.start_s >= 0.0) {
                v.push(format!(
                    "episodes[{i}] must have start_s >= 0 and duration_s > 0"
                ));
            }
        }
        if let Err(Error::Validation(r)) = self.rule_set().validate() {
            v.extend(r);
        }
        if self.alerts.prefilter_keepalive_every < 1 {
            v.push("alerts.prefilter_keepalive_every must be >= 1".into());
        }
        let mt = &self.metrics;
        if !(mt.throughput_bucket_s > 0.0 && mt.battery_sample_s > 0.0 && mt.distance_bin_m > 0.0) {
            v.push("metrics bucket, sample and bin widths must be > 0".into());
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            v.push(format!("duration_s must be > 0 (got {})", self.duration_s));
        } else if !(mt.warmup_s >= 0.0 && mt.warmup_s < self.duration_s) {
            v.push("metrics.warmup_s must be in [0, duration_s)".into());
        }
        v
    }

    /// Full validation: schema-level violations (validation error) then
    /// physics feasibility (infeasible error).
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        let profile = self.energy.resolved(&self.radio)?;
        profile.cycle_charge()?;
        if self.mac.timing == Timing::Slotted {
            let slot = self.slot_len()?;
            if slot > self.energy.report_interval_s {
                return Err(Error::Infeasible(
                    "slot longer than the report interval".into(),
                ));
            }
        }
        Ok(())
    }

    /// Airtime of one uplink for the configured radio.
    pub fn airtime(&self) -> Result<f64> {
        crate::energy::time_on_air(&self.radio)
    }

    pub fn slot_len(&self) -> Result<f64> {
        match self.mac.slot_s {
            Some(s) => Ok(s),
            None => self.airtime(),
        }
    }

    /// Slotted-model parameters implied by this scenario's traffic.
    pub fn mac_params(&self) -> Result<crate::reliability::MacParams> {
        let slot = self.slot_len()?;
        let slots = (self.energy.report_interval_s / slot).floor().max(1.0);
        Ok(crate::reliability::MacParams {
            n_nodes: self.herd.count,
            tau: 1.0 / slots,
            k_microslots: if self.mac.jitter {
                self.mac.k_microslots
            } else {
                1
            },
            slot_s: slot,
        })
    }
}

/// JSON merge: objects merge recursively, everything else replaces.
pub fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
