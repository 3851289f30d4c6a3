//! Observation sites, the domain metric and random Voronoi partitions.

mod delaunay;
mod graph;
mod partition;

pub use delaunay::{point_in_polygon, triangulate};
pub use graph::{DomainGraph, Metric, ResolvedTarget, Target};
pub use partition::{assign_target, draw_partition, Partition, PartitionOptions};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub point: Point,
}

/// Ordered sites with unique ids and no two points closer than the
/// duplicate tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    sites: Vec<Site>,
}

impl SiteSet {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        Self::with_tolerance(sites, DEFAULT_DUP_TOL)
    }

    pub fn with_tolerance(sites: Vec<Site>, dup_tol: f64) -> Result<Self> {
        let mut ids = HashSet::with_capacity(sites.len());
        for s in &sites {
            if !s.point.x.is_finite() || !s.point.y.is_finite() {
                return Err(Error::DegenerateInput(format!("site {} has non-finite coordinates", s.id)));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::DegenerateInput(format!("duplicate site id {}", s.id)));
            }
        }
        // Sweep in x order; only pairs within dup_tol in x can collide.
        let mut order: Vec<usize> = (0..sites.len()).collect();
        order.sort_by(|&a, &b| sites[a].point.x.total_cmp(&sites[b].point.x));
        for (k, &i) in order.iter().enumerate() {
            for &j in &order[k + 1..] {
                if sites[j].point.x - sites[i].point.x > dup_tol {
                    break;
                }
                if sites[i].point.dist(&sites[j].point) <= dup_tol {
                    return Err(Error::DegenerateInput(format!(
                        "sites {} and {} coincide",
                        sites[i].id, sites[j].id
                    )));
                }
            }
        }
        Ok(Self { sites })
    }

    /// Sites named by their position.
    pub fn from_points(points: &[Point]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .enumerate()
                .map(|(i, p)| Site {
                    id: i.to_string(),
                    point: *p,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn get(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn points(&self) -> Vec<Point> {
        self.sites.iter().map(|s| s.point).collect()
    }
}
