//! Planar geometry in metres: field boundaries, obstruction footprints and
//! line-of-sight tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    cross(a, b, p).abs() <= EPS * (1.0 + a.distance(b))
        && p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// True when the closed segments `ab` and `cd` share at least one point.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

/// A simple polygon given by its vertices in order (either orientation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|(a, b)| a.x * b.y - b.x * a.y)
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        if a.abs() < EPS {
            let n = self.vertices.len().max(1) as f64;
            let (sx, sy) = self
                .vertices
                .iter()
                .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
            return Point::new(sx / n, sy / n);
        }
        let (cx, cy) = self.edges().fold((0.0, 0.0), |(cx, cy), (p, q)| {
            let w = p.x * q.y - q.x * p.y;
            (cx + (p.x + q.x) * w, cy + (p.y + q.y) * w)
        });
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Strictly convex or degenerate-collinear-free check, either orientation.
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let mut sign = 0.0f64;
        for i in 0..n {
            let c = cross(
                self.vertices[i],
                self.vertices[(i + 1) % n],
                self.vertices[(i + 2) % n],
            );
            if c.abs() <= EPS {
                continue;
            }
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
        sign != 0.0
    }

    /// Point-in-polygon by ray casting. Points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.edges().any(|(a, b)| on_segment(p, a, b)) {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Strict interior test: inside and not on the boundary.
    pub fn contains_strictly(&self, p: Point) -> bool {
        self.contains(p) && !self.edges().any(|(a, b)| on_segment(p, a, b))
    }

    /// True when the segment `ab` touches the polygon (crosses an edge or lies inside).
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        self.contains(a)
            || self.contains(b)
            || self.edges().any(|(c, d)| segments_intersect(a, b, c, d))
    }

    /// Scale all vertices about `origin`.
    pub fn scaled(&self, origin: Point, factor: f64) -> Polygon {
        Polygon::new(
            self.vertices
                .iter()
                .map(|&p| scale_point(p, origin, factor))
                .collect(),
        )
    }

    /// Uniform draw from the polygon interior by rejection from its bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.bounds();
        loop {
            let p = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
            if self.contains_strictly(p) {
                return p;
            }
        }
    }
}

pub fn scale_point(p: Point, origin: Point, factor: f64) -> Point {
    Point::new(
        origin.x + (p.x - origin.x) * factor,
        origin.y + (p.y - origin.y) * factor,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_counts_as_inside() {
        let sq = Polygon::rect(0.0, 0.0, 10.0, 10.0);
        assert!(sq.contains(Point::new(10.0, 5.0)));
        assert!(sq.contains(Point::new(0.0, 0.0)));
        assert!(!sq.contains_strictly(Point::new(10.0, 5.0)));
        assert!(!sq.contains(Point::new(10.0001, 5.0)));
    }

    #[test]
    fn area_and_centroid_of_rectangle() {
        let r = Polygon::rect(0.0, 0.0, 4.0, 2.0);
        assert!((r.area() - 8.0).abs() < 1e-12);
        let c = r.centroid();
        assert!((c.x - 2.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convexity() {
        assert!(Polygon::rect(0.0, 0.0, 1.0, 1.0).is_convex());
        let dart = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(0.0, 2.0),
            Point::new(1.0, 1.0),
        ]);
        assert!(!dart.is_convex());
    }

    #[test]
    fn segment_blocked_by_square() {
        let rock = Polygon::rect(4.0, 4.0, 6.0, 6.0);
        assert!(rock.intersects_segment(Point::new(0.0, 5.0), Point::new(10.0, 5.0)));
        assert!(!rock.intersects_segment(Point::new(0.0, 0.0), Point::new(10.0, 0.0)));
        // endpoint inside the footprint
        assert!(rock.intersects_segment(Point::new(5.0, 5.0), Point::new(50.0, 50.0)));
    }
}
