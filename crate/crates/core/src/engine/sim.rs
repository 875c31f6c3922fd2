//! The discrete-event run loop.
//!
//! Events are ordered by (time, class, node, insertion order) so ties resolve
//! identically on every platform. A run is single-threaded and owns all of its
//! state; randomness comes from per-node substreams.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::failures::FailureTimeline;
use super::mobility::{step_mobility, AnimalState};
use super::report::{
    BatteryPoint, DistanceBin, EpisodeOutcome, Fate, FateCounts, MetricsReport, NodeEnergy,
    ThroughputPoint,
};
use super::scenario::{Episode, EpisodeKind, Scenario, Timing};
use crate::analytics::{evaluate_rules, RuleKind, TelemetrySample};
use crate::channel::{path_loss, reception_prob, snr, LinkSample};
use crate::energy::SECONDS_PER_HOUR;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::{substream, SimRng, Stream};

/// Path-loss distances are clamped here so co-located node and gateway stay finite.
const MIN_LINK_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    TxEnd(u64),
    CloudArrive(usize),
    BatterySample,
    Cycle,
    EventUplink,
    Retransmit,
}

impl Kind {
    fn class(self) -> u8 {
        match self {
            Kind::TxEnd(_) => 0,
            Kind::CloudArrive(_) => 1,
            Kind::BatterySample => 2,
            Kind::Cycle => 3,
            Kind::EventUplink => 4,
            Kind::Retransmit => 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    node: u32,
    order: u64,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.kind.class().cmp(&self.kind.class()))
            .then(other.node.cmp(&self.node))
            .then(other.order.cmp(&self.order))
    }
}

/// Deterministic single-server FIFO with a bounded waiting room.
#[derive(Debug, Clone)]
struct FifoServer {
    service_s: f64,
    bound: usize,
    in_system: VecDeque<f64>,
    last_departure: f64,
}

impl FifoServer {
    fn new(rate_per_s: f64, bound: u32) -> Self {
        Self {
            service_s: 1.0 / rate_per_s,
            bound: bound as usize,
            in_system: VecDeque::new(),
            last_departure: f64::NEG_INFINITY,
        }
    }

    /// Departure time of a job arriving at `t`, or `None` when the queue is full.
    fn offer(&mut self, t: f64) -> Option<f64> {
        while self.in_system.front().is_some_and(|&d| d <= t) {
            self.in_system.pop_front();
        }
        if self.in_system.len() >= self.bound {
            return None;
        }
        let d = self.last_departure.max(t) + self.service_s;
        self.last_departure = d;
        self.in_system.push_back(d);
        Some(d)
    }
}

struct NodeRngs {
    mobility: SimRng,
    schedule: SimRng,
    shadowing: SimRng,
    reception: SimRng,
    sensors: SimRng,
    channel: SimRng,
}

impl NodeRngs {
    fn new(seed: u64, id: u64) -> Self {
        Self {
            mobility: substream(seed, id, Stream::Mobility),
            schedule: substream(seed, id, Stream::Schedule),
            shadowing: substream(seed, id, Stream::Shadowing),
            reception: substream(seed, id, Stream::Reception),
            sensors: substream(seed, id, Stream::Sensors),
            channel: substream(seed, id, Stream::Channel),
        }
    }
}

struct Node {
    state: AnimalState,
    last_move_s: f64,
    phase_s: f64,
    baseline_temp_c: f64,
    episodes: Vec<Episode>,
    cycle: u64,
    seq: u64,
    buffer: VecDeque<usize>,
    retransmit_pending: bool,
    depleted_at_s: Option<f64>,
    consumed_mah: f64,
    rng: NodeRngs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TxKind {
    Regular,
    Event,
    Retransmit,
}

struct Packet {
    sample: TelemetrySample,
    fate: Option<Fate>,
    buffered: bool,
    in_outage: bool,
}

struct Transmission {
    packet: usize,
    node: u32,
    kind: TxKind,
    channel: u32,
    live: Vec<bool>,
    snr_db: Vec<f64>,
    decoded: Vec<bool>,
    /// Holds a demodulator path at this gateway until the transmission ends.
    locked: Vec<bool>,
    blocked: Vec<bool>,
    obstructed: Vec<bool>,
    strongest_interferer_db: Vec<f64>,
    overlapped: bool,
    nearest_gateway_m: f64,
}

struct Sim<'a> {
    sc: &'a Scenario,
    airtime_s: f64,
    gamma_db: f64,
    shadow: Normal<f64>,
    temp_noise: Normal<f64>,
    cycle_debit_mah: f64,
    silent_cycle_debit_mah: f64,
    extra_tx_debit_mah: f64,
    timeline: FailureTimeline,
    nodes: Vec<Node>,
    packets: Vec<Packet>,
    txs: HashMap<u64, Transmission>,
    active: Vec<Vec<u64>>,
    next_tx: u64,
    gateway_queues: Vec<FifoServer>,
    busy_demodulators: Vec<u32>,
    cloud: FifoServer,
    heap: BinaryHeap<Event>,
    order: u64,
    fates: FateCounts,
    tx_attempts: u64,
    tx_collided: u64,
    cloud_accepted: u64,
    cloud_dropped: u64,
    cloud_departures: Vec<f64>,
    samples: Vec<TelemetrySample>,
    battery_series: Vec<BatteryPoint>,
    distance_bins: Vec<DistanceBin>,
    events_processed: u64,
}

/// Execute one scenario with its own seed.
pub fn run(sc: &Scenario) -> Result<MetricsReport> {
    sc.validate()?;
    let mut sim = Sim::new(sc)?;
    sim.seed_events()?;
    while let Some(ev) = sim.heap.pop() {
        sim.events_processed += 1;
        sim.handle(ev)?;
    }
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario) -> Result<Self> {
        let profile = sc.energy.resolved(&sc.radio)?;
        let charge = profile.cycle_charge()?;
        let credit_mas = sc.energy.solar_credit_mj_per_cycle / sc.battery.voltage_v;
        let to_mah = |mas: f64| (mas / SECONDS_PER_HOUR).max(0.0);
        let airtime_s = sc.airtime()?;
        let extra_tx_mas = sc.energy.i_tx_ma * airtime_s + sc.energy.i_rx_ma * sc.energy.t_rx_s;
        let field = &sc.field.boundary_m;
        let mut nodes = Vec::with_capacity(sc.herd.count as usize);
        for id in 0..sc.herd.count {
            let mut placement = substream(sc.seed, u64::from(id), Stream::Placement);
            let position = match &sc.herd.initial_positions_m {
                Some(p) => p[id as usize],
                None => field.sample_interior(&mut placement),
            };
            let mut rng = NodeRngs::new(sc.seed, u64::from(id));
            let phase_s = rng.schedule.random_range(0.0..sc.energy.report_interval_s);
            let spread = sc.sensors.baseline_spread_c;
            let offset = if spread > 0.0 {
                Normal::new(0.0, spread)
                    .map_err(|e| Error::domain(e.to_string()))?
                    .sample(&mut rng.sensors)
            } else {
                0.0
            };
            let baseline_temp_c =
                sc.sensors.baseline_temp_c + offset.clamp(-3.0 * spread, 3.0 * spread);
            let mut state = AnimalState::new(id, position, sc.battery.capacity_mah);
            state.body_temp_c = baseline_temp_c;
            nodes.push(Node {
                state,
                last_move_s: 0.0,
                phase_s,
                baseline_temp_c,
                episodes: sc
                    .episodes
                    .iter()
                    .filter(|e| e.animal == id)
                    .copied()
                    .collect(),
                cycle: 0,
                seq: 0,
                buffer: VecDeque::new(),
                retransmit_pending: false,
                depleted_at_s: None,
                consumed_mah: 0.0,
                rng,
            });
        }
        let bins = (max_gateway_distance(sc) / sc.metrics.distance_bin_m)
            .ceil()
            .max(1.0) as usize;
        let distance_bins = (0..bins)
            .map(|b| DistanceBin {
                lo_m: b as f64 * sc.metrics.distance_bin_m,
                hi_m: (b + 1) as f64 * sc.metrics.distance_bin_m,
                attempts: 0,
                successes: 0,
            })
            .collect();
        Ok(Self {
            sc,
            airtime_s,
            gamma_db: sc.channel.gamma_th(sc.radio.spreading_factor)?,
            shadow: Normal::new(0.0, sc.channel.shadowing_sigma_db)
                .map_err(|e| Error::domain(e.to_string()))?,
            temp_noise: Normal::new(0.0, sc.sensors.temp_noise_c)
                .map_err(|e| Error::domain(e.to_string()))?,
            cycle_debit_mah: to_mah(charge.total() - credit_mas),
            silent_cycle_debit_mah: to_mah(
                charge.total() - charge.transmit - charge.receive - credit_mas,
            ),
            extra_tx_debit_mah: to_mah(extra_tx_mas),
            timeline: FailureTimeline::new(&sc.failure_plan, sc.gateways.len()),
            nodes,
            packets: Vec::new(),
            txs: HashMap::new(),
            active: vec![Vec::new(); sc.mac.channels as usize],
            next_tx: 0,
            gateway_queues: sc
                .gateways
                .iter()
                .map(|g| FifoServer::new(g.ingest_capacity_msg_s, g.ingest_queue_bound))
                .collect(),
            busy_demodulators: vec![0; sc.gateways.len()],
            cloud: FifoServer::new(sc.cloud.service_rate_msg_s, sc.cloud.queue_bound),
            heap: BinaryHeap::new(),
            order: 0,
            fates: FateCounts::default(),
            tx_attempts: 0,
            tx_collided: 0,
            cloud_accepted: 0,
            cloud_dropped: 0,
            cloud_departures: Vec::new(),
            samples: Vec::new(),
            battery_series: Vec::new(),
            distance_bins,
            events_processed: 0,
        })
    }

    fn push(&mut self, time: f64, node: u32, kind: Kind) -> Result<()> {
        if self.heap.len() >= self.sc.limits.max_pending_events {
            return Err(Error::Resource(format!(
                "event queue exceeded {} pending events",
                self.sc.limits.max_pending_events
            )));
        }
        self.order += 1;
        self.heap.push(Event {
            time,
            node,
            order: self.order,
            kind,
        });
        Ok(())
    }

    fn seed_events(&mut self) -> Result<()> {
        for id in 0..self.sc.herd.count {
            if let Some(t) = self.cycle_time(id as usize, 0) {
                self.push(t, id, Kind::Cycle)?;
            }
        }
        let step = self.sc.metrics.battery_sample_s;
        let mut t = 0.0;
        let mut k = 0u64;
        while t <= self.sc.duration_s {
            self.push(t, u32::MAX, Kind::BatterySample)?;
            k += 1;
            t = k as f64 * step;
        }
        if self.sc.alerts.event_uplink {
            let window = self.sc.alerts.inactivity_window_s;
            for e in &self.sc.episodes {
                let onset = onset_of(e, window);
                if onset >= e.end_s() && e.kind == EpisodeKind::Inactivity {
                    continue;
                }
                for r in 0..=self.sc.alerts.event_repeats {
                    let t = onset + f64::from(r) * self.sc.alerts.event_repeat_spacing_s;
                    if t < self.sc.duration_s {
                        self.push(t, e.animal, Kind::EventUplink)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Start time of cycle `k` for node `id`, or `None` past the horizon.
    fn cycle_time(&mut self, id: usize, k: u64) -> Option<f64> {
        let sc = self.sc;
        let interval = sc.energy.report_interval_s;
        let node = &mut self.nodes[id];
        let t = match sc.mac.timing {
            Timing::Continuous => {
                let jitter = if sc.mac.jitter && sc.mac.jitter_window_s > 0.0 {
                    node.rng.schedule.random_range(0.0..sc.mac.jitter_window_s)
                } else {
                    0.0
                };
                node.phase_s + k as f64 * interval + jitter
            }
            Timing::Slotted => {
                let slot = sc.slot_len().unwrap_or(self.airtime_s);
                let slots = (interval / slot).floor().max(1.0) as u64;
                let idx = node.rng.schedule.random_range(0..slots);
                let micro = if sc.mac.jitter && sc.mac.k_microslots > 1 {
                    let j = node.rng.schedule.random_range(0..sc.mac.k_microslots);
                    f64::from(j) * slot / f64::from(sc.mac.k_microslots)
                } else {
                    0.0
                };
                k as f64 * interval + idx as f64 * slot + micro
            }
        };
        (t < sc.duration_s).then_some(t)
    }

    fn handle(&mut self, ev: Event) -> Result<()> {
        match ev.kind {
            Kind::TxEnd(id) => self.end_tx(ev.time, id),
            Kind::CloudArrive(pkt) => {
                self.cloud_arrive(ev.time, pkt);
                Ok(())
            }
            Kind::BatterySample => {
                for n in &self.nodes {
                    self.battery_series.push(BatteryPoint {
                        time_s: ev.time,
                        node: n.state.id,
                        battery_mah: n.state.battery_mah,
                    });
                }
                Ok(())
            }
            Kind::Cycle => self.cycle(ev.time, ev.node as usize),
            Kind::EventUplink => self.event_uplink(ev.time, ev.node as usize),
            Kind::Retransmit => self.retransmit(ev.time, ev.node as usize),
        }
    }

    fn advance_mobility(&mut self, id: usize, t: f64) -> Result<()> {
        let sc = self.sc;
        let node = &mut self.nodes[id];
        let dt = t - node.last_move_s;
        if dt <= 0.0 {
            return Ok(());
        }
        let frozen: f64 = node
            .episodes
            .iter()
            .filter(|e| e.kind == EpisodeKind::Inactivity)
            .map(|e| (t.min(e.end_s()) - node.last_move_s.max(e.start_s)).max(0.0))
            .sum();
        let moving = dt - frozen;
        node.last_move_s = t;
        if moving > 0.0 {
            node.state = step_mobility(
                &node.state,
                moving,
                &sc.field.boundary_m,
                &sc.mobility,
                &mut node.rng.mobility,
            )?;
        }
        if node
            .episodes
            .iter()
            .any(|e| e.kind == EpisodeKind::Inactivity && e.contains(t))
        {
            node.state.velocity = Point::new(0.0, 0.0);
        }
        Ok(())
    }

    /// Debit `mah`; returns false (and marks depletion) when the battery can't cover it.
    fn debit(&mut self, id: usize, t: f64, mah: f64) -> bool {
        let node = &mut self.nodes[id];
        if node.depleted_at_s.is_some() {
            return false;
        }
        if node.state.battery_mah < mah {
            node.depleted_at_s = Some(t);
            return false;
        }
        node.state.battery_mah -= mah;
        node.consumed_mah += mah;
        true
    }

    fn sense(&mut self, id: usize, t: f64) -> TelemetrySample {
        let sc = self.sc;
        let node = &mut self.nodes[id];
        let mut temp = node.baseline_temp_c + self.temp_noise.sample(&mut node.rng.sensors);
        let grazing = node.rng.sensors.random_range(0.1..0.3);
        let speed_max = sc.mobility.speed_max_m_s.max(f64::MIN_POSITIVE);
        let mut activity = if node.state.speed() > 0.0 {
            0.3 + 0.7 * node.state.speed() / speed_max
        } else {
            grazing
        };
        let mut still_s = 0.0;
        for e in node.episodes.iter().filter(|e| e.contains(t)) {
            match e.kind {
                EpisodeKind::Fever => {
                    temp = e.level + self.temp_noise.sample(&mut node.rng.sensors).abs()
                }
                EpisodeKind::Inactivity => {
                    activity = e.level;
                    still_s = t - e.start_s;
                }
            }
        }
        node.state.body_temp_c = temp;
        node.state.activity = activity;
        TelemetrySample {
            animal_id: node.state.id,
            sample_s: t,
            arrival_s: f64::NAN,
            position: node.state.position,
            temp_c: temp,
            activity,
            still_s,
        }
    }

    fn new_packet(&mut self, id: usize, sample: TelemetrySample, t: f64) -> usize {
        self.nodes[id].seq += 1;
        self.packets.push(Packet {
            sample,
            fate: None,
            buffered: false,
            in_outage: self.timeline.any_outage(t),
        });
        self.packets.len() - 1
    }

    fn cycle(&mut self, t: f64, id: usize) -> Result<()> {
        let k = self.nodes[id].cycle;
        self.nodes[id].cycle += 1;
        self.advance_mobility(id, t)?;
        let sample = self.sense(id, t);
        let a = &self.sc.alerts;
        let anomalous =
            sample.temp_c >= a.fever_threshold_c || sample.activity < a.inactivity_floor;
        let suppressed = a.edge_prefilter
            && !anomalous
            && !k.is_multiple_of(u64::from(a.prefilter_keepalive_every));
        let cost = if suppressed {
            self.silent_cycle_debit_mah
        } else {
            self.cycle_debit_mah
        };
        if !self.debit(id, t, cost) {
            return Ok(());
        }
        if let Some(next) = self.cycle_time(id, k + 1) {
            self.push(next, id as u32, Kind::Cycle)?;
        }
        if suppressed {
            return Ok(());
        }
        let pkt = self.new_packet(id, sample, t);
        self.start_tx(t, id, pkt, TxKind::Regular)
    }

    fn event_uplink(&mut self, t: f64, id: usize) -> Result<()> {
        if !self.debit(id, t, self.extra_tx_debit_mah) {
            return Ok(());
        }
        self.advance_mobility(id, t)?;
        let sample = self.sense(id, t);
        let pkt = self.new_packet(id, sample, t);
        self.start_tx(t, id, pkt, TxKind::Event)
    }

    fn retransmit(&mut self, t: f64, id: usize) -> Result<()> {
        self.nodes[id].retransmit_pending = false;
        let Some(pkt) = self.nodes[id].buffer.pop_front() else {
            return Ok(());
        };
        if !self.debit(id, t, self.extra_tx_debit_mah) {
            self.nodes[id].buffer.push_front(pkt);
            return Ok(());
        }
        self.advance_mobility(id, t)?;
        self.start_tx(t, id, pkt, TxKind::Retransmit)
    }

    fn start_tx(&mut self, t: f64, id: usize, packet: usize, kind: TxKind) -> Result<()> {
        let sc = self.sc;
        let node = &mut self.nodes[id];
        let pos = node.state.position;
        let n_gw = sc.gateways.len();
        let mut tx = Transmission {
            packet,
            node: id as u32,
            kind,
            channel: 0,
            live: Vec::with_capacity(n_gw),
            snr_db: Vec::with_capacity(n_gw),
            decoded: Vec::with_capacity(n_gw),
            locked: vec![false; n_gw],
            blocked: vec![false; n_gw],
            obstructed: Vec::with_capacity(n_gw),
            strongest_interferer_db: vec![f64::NEG_INFINITY; n_gw],
            overlapped: false,
            nearest_gateway_m: f64::INFINITY,
        };
        for (g, gw) in sc.gateways.iter().enumerate() {
            let d = pos.distance(gw.position_m);
            tx.nearest_gateway_m = tx.nearest_gateway_m.min(d);
            let obstructed = sc
                .field
                .obstructions_m
                .iter()
                .any(|o| o.intersects_segment(pos, gw.position_m));
            let shadow_db = self.shadow.sample(&mut node.rng.shadowing);
            let sample = LinkSample {
                distance_m: d.max(MIN_LINK_DISTANCE_M),
                obstructed,
                shadow_db,
            };
            let s = snr(path_loss(&sample, &sc.channel)?, &sc.radio);
            let p = reception_prob(
                s,
                self.gamma_db,
                sc.channel.logistic_alpha_per_db,
                sc.reception,
            );
            let u: f64 = node.rng.reception.random();
            let live = self.timeline.is_live(g, t);
            let decoded = u < p;
            if live && decoded {
                if self.busy_demodulators[g] < gw.demodulators {
                    self.busy_demodulators[g] += 1;
                    tx.locked[g] = true;
                } else {
                    tx.blocked[g] = true;
                }
            }
            tx.live.push(live);
            tx.snr_db.push(s);
            tx.decoded.push(decoded);
            tx.obstructed.push(obstructed);
        }
        tx.channel = if sc.mac.channels > 1 {
            node.rng.channel.random_range(0..sc.mac.channels)
        } else {
            0
        };
        let tx_id = self.next_tx;
        self.next_tx += 1;
        let ch = tx.channel as usize;
        for &other_id in &self.active[ch] {
            let other = self
                .txs
                .get_mut(&other_id)
                .expect("active transmission is registered");
            other.overlapped = true;
            tx.overlapped = true;
            for g in 0..n_gw {
                other.strongest_interferer_db[g] =
                    other.strongest_interferer_db[g].max(tx.snr_db[g]);
                tx.strongest_interferer_db[g] = tx.strongest_interferer_db[g].max(other.snr_db[g]);
            }
        }
        self.active[ch].push(tx_id);
        self.txs.insert(tx_id, tx);
        self.push(t + self.airtime_s, id as u32, Kind::TxEnd(tx_id))
    }

    fn end_tx(&mut self, t: f64, tx_id: u64) -> Result<()> {
        let sc = self.sc;
        let tx = self.txs.remove(&tx_id).expect("transmission ends once");
        self.active[tx.channel as usize].retain(|&x| x != tx_id);
        for (g, &locked) in tx.locked.iter().enumerate() {
            if locked {
                self.busy_demodulators[g] -= 1;
            }
        }
        self.tx_attempts += 1;
        let collided: Vec<bool> = (0..sc.gateways.len())
            .map(|g| {
                let intf = tx.strongest_interferer_db[g];
                intf > f64::NEG_INFINITY
                    && !sc
                        .mac
                        .capture_threshold_db
                        .is_some_and(|thr| tx.snr_db[g] - intf >= thr)
            })
            .collect();
        if tx.overlapped && collided.iter().all(|&c| c) {
            self.tx_collided += 1;
        }
        let ok: Vec<usize> = (0..sc.gateways.len())
            .filter(|&g| tx.locked[g] && !collided[g])
            .collect();
        let bin = ((tx.nearest_gateway_m / sc.metrics.distance_bin_m) as usize)
            .min(self.distance_bins.len() - 1);
        self.distance_bins[bin].attempts += 1;
        let id = tx.node as usize;
        if ok.is_empty() {
            let cause = if !tx.live.iter().any(|&l| l) {
                None
            } else if (0..sc.gateways.len()).any(|g| tx.live[g] && collided[g]) {
                Some(Fate::LostCollision)
            } else if tx.blocked.iter().any(|&b| b) {
                Some(Fate::LostCongestion)
            } else if (0..sc.gateways.len()).any(|g| tx.live[g] && !tx.obstructed[g]) {
                Some(Fate::LostSnr)
            } else {
                Some(Fate::LostObstruction)
            };
            self.undelivered(id, tx.packet, tx.kind, cause);
            return Ok(());
        }
        self.distance_bins[bin].successes += 1;
        let arrival = ok
            .iter()
            .filter_map(|&g| {
                self.gateway_queues[g]
                    .offer(t)
                    .map(|d| d + sc.gateways[g].backhaul_delay_s)
            })
            .fold(f64::INFINITY, f64::min);
        if arrival.is_infinite() {
            self.set_fate(tx.packet, Fate::LostCongestion);
            return Ok(());
        }
        let fate = if self.packets[tx.packet].buffered {
            Fate::BufferedThenDelivered
        } else {
            Fate::Delivered
        };
        self.set_fate(tx.packet, fate);
        self.push(arrival, tx.node, Kind::CloudArrive(tx.packet))?;
        let node = &mut self.nodes[id];
        if !node.buffer.is_empty() && !node.retransmit_pending {
            let at = t + sc.mac.retransmit_gap_s;
            if at < sc.duration_s {
                node.retransmit_pending = true;
                self.push(at, tx.node, Kind::Retransmit)?;
            }
        }
        Ok(())
    }

    /// Route an unreceived packet into the node buffer, or assign its loss cause
    /// when the node keeps no buffer. `None` means no gateway was live.
    fn undelivered(&mut self, id: usize, pkt: usize, kind: TxKind, cause: Option<Fate>) {
        let cap = self.sc.node_buffer as usize;
        if cap == 0 {
            self.set_fate(pkt, cause.unwrap_or(Fate::Expired));
            return;
        }
        self.packets[pkt].buffered = true;
        let node = &mut self.nodes[id];
        if kind == TxKind::Retransmit {
            node.buffer.push_front(pkt);
        } else {
            node.buffer.push_back(pkt);
        }
        let mut evicted = Vec::new();
        while node.buffer.len() > cap {
            evicted.extend(node.buffer.pop_front());
        }
        for p in evicted {
            self.set_fate(p, Fate::Expired);
        }
    }

    fn set_fate(&mut self, pkt: usize, fate: Fate) {
        let p = &mut self.packets[pkt];
        debug_assert!(p.fate.is_none(), "packet fate assigned twice");
        p.fate = Some(fate);
        self.fates.add(fate);
    }

    fn cloud_arrive(&mut self, t: f64, pkt: usize) {
        match self.cloud.offer(t) {
            Some(done) => {
                self.cloud_accepted += 1;
                self.cloud_departures.push(done);
                let mut s = self.packets[pkt].sample;
                s.arrival_s = done;
                self.samples.push(s);
            }
            None => self.cloud_dropped += 1,
        }
    }

    fn finish(mut self) -> MetricsReport {
        let sc = self.sc;
        let mut leftovers = Vec::new();
        for n in &mut self.nodes {
            leftovers.extend(n.buffer.drain(..));
        }
        for p in leftovers {
            self.set_fate(p, Fate::Expired);
        }
        let generated = self.packets.len() as u64;
        assert_eq!(
            self.fates.total(),
            generated,
            "every packet receives exactly one fate"
        );

        let (outage_generated, outage_recovered) = self
            .packets
            .iter()
            .filter(|p| p.in_outage)
            .fold((0, 0), |(g, r), p| {
                (g + 1, r + u64::from(p.fate.is_some_and(Fate::is_delivered)))
            });
        let recovery_ratio = if outage_generated == 0 {
            1.0
        } else {
            outage_recovered as f64 / outage_generated as f64
        };

        let bucket = sc.metrics.throughput_bucket_s;
        let n_buckets = (sc.duration_s / bucket).ceil() as usize;
        let mut counts = vec![0u64; n_buckets];
        let mut after_warmup = 0u64;
        for &d in &self.cloud_departures {
            if d < sc.duration_s {
                counts[((d / bucket) as usize).min(n_buckets - 1)] += 1;
                if d >= sc.metrics.warmup_s {
                    after_warmup += 1;
                }
            }
        }
        let throughput_series = counts
            .iter()
            .enumerate()
            .map(|(b, &c)| {
                let lo = b as f64 * bucket;
                let width = (sc.duration_s - lo).min(bucket);
                ThroughputPoint {
                    time_s: lo,
                    msg_per_s: c as f64 / width,
                }
            })
            .collect();

        let mut samples = std::mem::take(&mut self.samples);
        samples.sort_by(|a, b| {
            a.animal_id
                .cmp(&b.animal_id)
                .then(a.sample_s.total_cmp(&b.sample_s))
                .then(a.arrival_s.total_cmp(&b.arrival_s))
        });
        let alert_log = evaluate_rules(&samples, &sc.rule_set(), sc.cloud.notification_delay_s)
            .expect("samples are sorted and rules validated");
        let window = sc.alerts.inactivity_window_s;
        let episodes = sc
            .episodes
            .iter()
            .map(|e| {
                let onset = onset_of(e, window);
                let rule = match e.kind {
                    EpisodeKind::Fever => RuleKind::Fever,
                    EpisodeKind::Inactivity => RuleKind::Inactivity,
                };
                let hit = alert_log
                    .iter()
                    .filter(|a| a.animal_id == e.animal && a.rule == rule)
                    .find(|a| {
                        a.trigger_s >= e.start_s
                            && a.trigger_s <= e.end_s() + sc.energy.report_interval_s
                    });
                EpisodeOutcome {
                    animal_id: e.animal,
                    kind: e.kind,
                    onset_s: onset,
                    delivery_s: hit.map(|a| a.delivery_s),
                    latency_s: hit.map(|a| a.delivery_s - onset),
                }
            })
            .collect();

        let interval_h = sc.energy.report_interval_s / SECONDS_PER_HOUR;
        let energy = self
            .nodes
            .iter()
            .map(|n| {
                let cycles = n.cycle.max(1) as f64;
                let per_cycle = n.consumed_mah / cycles;
                NodeEnergy {
                    node: n.state.id,
                    battery_mah: n.state.battery_mah,
                    consumed_mah: n.consumed_mah,
                    projected_lifetime_h: (per_cycle > 0.0)
                        .then(|| sc.battery.capacity_mah / per_cycle * interval_h),
                    depleted_at_s: n.depleted_at_s,
                }
            })
            .collect();

        let delivered = self.fates.delivered_total();
        let pdr = if generated == 0 {
            1.0
        } else {
            delivered as f64 / generated as f64
        };
        MetricsReport {
            scenario: sc.name.clone(),
            seed: sc.seed,
            duration_s: sc.duration_s,
            nodes: sc.herd.count,
            generated,
            fates: self.fates,
            pdr,
            loss: 1.0 - pdr,
            loss_by_cause: self.fates.fractions(generated),
            tx_attempts: self.tx_attempts,
            tx_collided: self.tx_collided,
            collision_rate: if self.tx_attempts == 0 {
                0.0
            } else {
                self.tx_collided as f64 / self.tx_attempts as f64
            },
            cloud_accepted: self.cloud_accepted,
            cloud_dropped: self.cloud_dropped,
            throughput_msg_s: after_warmup as f64 / (sc.duration_s - sc.metrics.warmup_s),
            throughput_series,
            outage_generated,
            outage_recovered,
            recovery_ratio,
            battery_series: self.battery_series,
            energy,
            alert_log,
            episodes,
            distance_histogram: self.distance_bins,
            events_processed: self.events_processed,
        }
    }
}

/// Instant an episode's rule condition becomes true.
fn onset_of(e: &Episode, inactivity_window_s: f64) -> f64 {
    match e.kind {
        EpisodeKind::Fever => e.start_s,
        EpisodeKind::Inactivity => e.start_s + inactivity_window_s,
    }
}

fn max_gateway_distance(sc: &Scenario) -> f64 {
    sc.field
        .boundary_m
        .vertices
        .iter()
        .flat_map(|&v| sc.gateways.iter().map(move |g| v.distance(g.position_m)))
        .fold(0.0, f64::max)
}
