//! Gateway outage schedules.

use super::scenario::Outage;

/// Per-gateway outage intervals, sorted and merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FailureTimeline {
    per_gateway: Vec<Vec<(f64, f64)>>,
}

impl FailureTimeline {
    /// Overlapping or touching intervals on one gateway are merged with a warning.
    pub fn new(plan: &[Outage], gateways: usize) -> Self {
        let mut per_gateway = vec![Vec::<(f64, f64)>::new(); gateways];
        for o in plan {
            if let Some(list) = per_gateway.get_mut(o.gateway) {
                list.push((o.start_s, o.end_s));
            }
        }
        for (g, list) in per_gateway.iter_mut().enumerate() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut merged: Vec<(f64, f64)> = Vec::with_capacity(list.len());
            for &(s, e) in list.iter() {
                match merged.last_mut() {
                    Some(last) if s <= last.1 => {
                        log::warn!(
                            "gateway {g}: overlapping outages [{}, {}) and [{s}, {e}) merged",
                            last.0,
                            last.1
                        );
                        last.1 = last.1.max(e);
                    }
                    _ => merged.push((s, e)),
                }
            }
            *list = merged;
        }
        Self { per_gateway }
    }

    pub fn is_live(&self, gateway: usize, t: f64) -> bool {
        self.per_gateway
            .get(gateway)
            .is_none_or(|list| !list.iter().any(|&(s, e)| t >= s && t < e))
    }

    /// Gateways live at `t`.
    pub fn live_set(&self, t: f64) -> Vec<usize> {
        (0..self.per_gateway.len())
            .filter(|&g| self.is_live(g, t))
            .collect()
    }

    /// True when any gateway is down at `t`.
    pub fn any_outage(&self, t: f64) -> bool {
        (0..self.per_gateway.len()).any(|g| !self.is_live(g, t))
    }

    pub fn intervals(&self, gateway: usize) -> &[(f64, f64)] {
        self.per_gateway.get(gateway).map_or(&[], Vec::as_slice)
    }
}
