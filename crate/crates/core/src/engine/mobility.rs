//! Random-waypoint herd mobility.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{MobilityModel, MobilitySpec};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

/// Guards against zero-length legs with zero pause spinning forever.
const MAX_LEGS_PER_STEP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimalState {
    pub id: u32,
    pub position: Point,
    /// Current velocity vector, m/s.
    pub velocity: Point,
    pub body_temp_c: f64,
    /// Motion magnitude in arbitrary accelerometer units.
    pub activity: f64,
    pub battery_mah: f64,
    pub waypoint: Option<Point>,
    pub speed_m_s: f64,
    pub pause_left_s: f64,
}

impl AnimalState {
    pub fn new(id: u32, position: Point, battery_mah: f64) -> Self {
        Self {
            id,
            position,
            velocity: Point::new(0.0, 0.0),
            body_temp_c: 0.0,
            activity: 0.0,
            battery_mah,
            waypoint: None,
            speed_m_s: 0.0,
            pause_left_s: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.x.hypot(self.velocity.y)
    }

    pub fn is_paused(&self) -> bool {
        self.waypoint.is_none()
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Advance one animal by `dt` seconds: walk toward the current waypoint at
/// the drawn speed, pause on arrival, then pick a fresh waypoint uniformly in
/// the field. The field must be convex so every leg stays inside it.
pub fn step_mobility<R: Rng + ?Sized>(
    state: &AnimalState,
    dt: f64,
    field: &Polygon,
    spec: &MobilitySpec,
    rng: &mut R,
) -> Result<AnimalState> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!(
            "mobility step must be positive (got {dt})"
        )));
    }
    let mut s = state.clone();
    if spec.model == MobilityModel::Static {
        s.velocity = Point::new(0.0, 0.0);
        return Ok(s);
    }
    let mut remaining = dt;
    for _ in 0..MAX_LEGS_PER_STEP {
        if remaining <= 0.0 {
            break;
        }
        let Some(target) = s.waypoint else {
            if s.pause_left_s > 0.0 {
                let used = s.pause_left_s.min(remaining);
                s.pause_left_s -= used;
                remaining -= used;
                s.velocity = Point::new(0.0, 0.0);
                continue;
            }
            let speed = draw(rng, spec.speed_min_m_s, spec.speed_max_m_s);
            if speed <= 0.0 {
                s.velocity = Point::new(0.0, 0.0);
                break;
            }
            s.waypoint = Some(field.sample_interior(rng));
            s.speed_m_s = speed;
            continue;
        };
        let dist = s.position.distance(target);
        let need = dist / s.speed_m_s;
        if need <= remaining {
            s.position = target;
            s.waypoint = None;
            s.velocity = Point::new(0.0, 0.0);
            s.pause_left_s = draw(rng, spec.pause_min_s, spec.pause_max_s);
            remaining -= need;
        } else {
            let f = s.speed_m_s * remaining / dist;
            let (dx, dy) = (target.x - s.position.x, target.y - s.position.y);
            s.position = Point::new(s.position.x + dx * f, s.position.y + dy * f);
            s.velocity = Point::new(dx / dist * s.speed_m_s, dy / dist * s.speed_m_s);
            remaining = 0.0;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn field() -> Polygon {
        Polygon::rect(0.0, 0.0, 300.0, 200.0)
    }

    #[test]
    fn immobile_range_keeps_position() {
        let spec = MobilitySpec {
            speed_min_m_s: 0.0,
            speed_max_m_s: 0.0,
            ..Default::default()
        };
        let mut rng = substream(1, 0, Stream::Mobility);
        let s0 = AnimalState::new(0, Point::new(10.0, 20.0), 100.0);
        let s1 = step_mobility(&s0, 500.0, &field(), &spec, &mut rng).unwrap();
        assert_eq!(s1.position, s0.position);
    }

    #[test]
    fn reaching_waypoint_enters_pause() {
        let spec = MobilitySpec {
            pause_min_s: 50.0,
            pause_max_s: 50.0,
            ..Default::default()
        };
        let mut rng = substream(1, 0, Stream::Mobility);
        let mut s0 = AnimalState::new(0, Point::new(10.0, 20.0), 100.0);
        s0.waypoint = Some(s0.position);
        s0.speed_m_s = 0.5;
        let s1 = step_mobility(&s0, 1.0, &field(), &spec, &mut rng).unwrap();
        assert!(s1.is_paused());
        assert_eq!(s1.pause_left_s, 49.0);
        assert_eq!(s1.position, s0.position);
    }

    #[test]
    fn long_trace_stays_strictly_inside() {
        let f = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(400.0, 50.0),
            Point::new(250.0, 300.0),
        ]);
        let spec = MobilitySpec {
            pause_min_s: 0.0,
            pause_max_s: 30.0,
            ..Default::default()
        };
        let mut rng = substream(9, 0, Stream::Mobility);
        let mut s = AnimalState::new(0, f.centroid(), 100.0);
        for _ in 0..10_000 {
            s = step_mobility(&s, 37.0, &f, &spec, &mut rng).unwrap();
            assert!(f.contains_strictly(s.position), "{:?}", s.position);
        }
    }

    #[test]
    fn non_positive_step_is_rejected() {
        let mut rng = substream(1, 0, Stream::Mobility);
        let s0 = AnimalState::new(0, Point::new(1.0, 1.0), 1.0);
        assert!(step_mobility(&s0, 0.0, &field(), &MobilitySpec::default(), &mut rng).is_err());
    }
}
