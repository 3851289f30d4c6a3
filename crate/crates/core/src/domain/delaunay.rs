//! Bowyer–Watson triangulation on exact orientation and incircle predicates.

use std::collections::HashSet;

use robust::{incircle, orient2d, Coord};

use super::Point;
use crate::error::{Error, Result};

/// Super-triangle size relative to the point cloud extent. The predicates
/// are exact, so a large factor costs nothing in accuracy.
const SUPER_SCALE: f64 = 1e4;

fn coord(p: &Point) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

/// Delaunay triangles as counter-clockwise index triples into `points`.
/// Cocircular configurations resolve by insertion order.
pub fn triangulate(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!("triangulation needs 3 points, got {n}")));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let a = points[0];
    let b = points
        .iter()
        .copied()
        .find(|p| p.dist(&a) > 0.0)
        .ok_or_else(|| Error::DegenerateInput("all points coincide".into()))?;
    if points.iter().all(|p| orient2d(coord(&a), coord(&b), coord(p)) == 0.0) {
        return Err(Error::DegenerateInput("all points are collinear".into()));
    }

    let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
    let cx = 0.5 * (lo.x + hi.x);
    let cy = 0.5 * (lo.y + hi.y);
    let r = SUPER_SCALE * span;
    let mut pts: Vec<Point> = points.to_vec();
    pts.push(Point::new(cx - 2.0 * r, cy - r));
    pts.push(Point::new(cx + 2.0 * r, cy - r));
    pts.push(Point::new(cx, cy + 2.0 * r));
    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];

    let mut bad = Vec::new();
    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    for i in 0..n {
        let p = coord(&pts[i]);
        bad.clear();
        for (t, tri) in tris.iter().enumerate() {
            if incircle(coord(&pts[tri[0]]), coord(&pts[tri[1]]), coord(&pts[tri[2]]), p) > 0.0 {
                bad.push(t);
            }
        }
        directed.clear();
        for &t in &bad {
            let [u, v, w] = tris[t];
            directed.extend([(u, v), (v, w), (w, u)]);
        }
        let boundary: Vec<(usize, usize)> = directed
            .iter()
            .copied()
            .filter(|&(u, v)| !directed.contains(&(v, u)))
            .collect();
        // Remove from the back so swap_remove keeps earlier indices valid.
        for &t in bad.iter().rev() {
            tris.swap_remove(t);
        }
        for (u, v) in boundary {
            tris.push([u, v, i]);
        }
    }
    tris.retain(|t| t.iter().all(|&v| v < n));
    tris.sort_unstable();
    Ok(tris)
}

/// Even-odd rule; `polygon` is closed implicitly.
pub fn point_in_polygon(p: &Point, polygon: &[Point]) -> bool {
    let mut inside = false;
    let m = polygon.len();
    for i in 0..m {
        let a = polygon[i];
        let b = polygon[(i + 1) % m];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}
