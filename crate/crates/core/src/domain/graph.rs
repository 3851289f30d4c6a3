use std::collections::HashSet;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use super::delaunay::{point_in_polygon, triangulate};
use super::{Point, SiteSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    /// Shortest paths over a trimmed Delaunay triangulation.
    Graph,
    /// A user-supplied site-by-site distance matrix.
    Precomputed,
}

/// A prediction location: a registered vertex or a free point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Vertex(usize),
    Point(Point),
}

/// A target with its attachment to the vertex set precomputed, so that
/// site-to-target distances are O(1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedTarget {
    pub point: Point,
    /// `(vertex, hop)`: distances go through `vertex`, plus a Euclidean hop.
    anchor: Option<(usize, f64)>,
}

/// Sites come first among the vertices; `dist` is `n_sites × n_vertices`.
#[derive(Debug, Clone)]
pub struct DomainGraph {
    metric: Metric,
    vertices: Vec<Point>,
    n_sites: usize,
    dist: Vec<f64>,
    edges: Vec<(usize, usize)>,
}

impl DomainGraph {
    pub fn euclidean(sites: &SiteSet) -> Self {
        let vertices = sites.points();
        let n = vertices.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = vertices[i].dist(&vertices[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self {
            metric: Metric::Euclidean,
            vertices,
            n_sites: n,
            dist,
            edges: Vec::new(),
        }
    }

    /// Triangulates sites ∪ `extra_vertices`, drops triangles whose centroid
    /// falls outside `boundary`, and runs single-source shortest paths from
    /// every site.
    pub fn delaunay(sites: &SiteSet, boundary: Option<&[Point]>, extra_vertices: &[Point]) -> Result<Self> {
        let mut vertices = sites.points();
        vertices.extend_from_slice(extra_vertices);
        let n_sites = sites.len();
        let nv = vertices.len();
        let mut tris = triangulate(&vertices)?;
        if let Some(poly) = boundary {
            if poly.len() < 3 {
                return Err(Error::DegenerateInput("boundary polygon needs 3 vertices".into()));
            }
            tris.retain(|t| {
                let c = Point::new(
                    t.iter().map(|&i| vertices[i].x).sum::<f64>() / 3.0,
                    t.iter().map(|&i| vertices[i].y).sum::<f64>() / 3.0,
                );
                point_in_polygon(&c, poly)
            });
        }
        let mut edge_set = HashSet::new();
        for t in &tris {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edge_set.insert((a.min(b), a.max(b)));
            }
        }
        let mut edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
        edges.sort_unstable();

        let mut g: UnGraph<(), f64> = UnGraph::with_capacity(nv, edges.len());
        for _ in 0..nv {
            g.add_node(());
        }
        for &(a, b) in &edges {
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b), vertices[a].dist(&vertices[b]));
        }
        let mut dist = vec![f64::INFINITY; n_sites * nv];
        for s in 0..n_sites {
            let scores = dijkstra(&g, NodeIndex::new(s), None, |e| *e.weight());
            let row = &mut dist[s * nv..(s + 1) * nv];
            for (node, d) in scores {
                row[node.index()] = d;
            }
            if let Some(v) = row.iter().position(|d| !d.is_finite()) {
                return Err(Error::DisconnectedGraph(format!("vertex {v} is unreachable from site {s}")));
            }
        }
        Ok(Self {
            metric: Metric::Graph,
            vertices,
            n_sites,
            dist,
            edges,
        })
    }

    /// Wraps a symmetric `n × n` matrix given in site order.
    pub fn precomputed(sites: &SiteSet, dist: Vec<f64>) -> Result<Self> {
        let n = sites.len();
        if dist.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: dist.len(),
            });
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::DegenerateInput(format!("distance matrix diagonal {i} is nonzero")));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::DegenerateInput(format!("distance ({i},{j}) = {d}")));
                }
                if (d - dist[j * n + i]).abs() > 1e-12 * d.max(1.0) {
                    return Err(Error::DegenerateInput(format!("distance matrix asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self {
            metric: Metric::Precomputed,
            vertices: sites.points(),
            n_sites: n,
            dist,
            edges: Vec::new(),
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Undirected edges `(a, b)` with `a < b`; empty unless triangulated.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Distance between two sites.
    #[inline]
    pub fn site_dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.vertices.len() + b]
    }

    pub fn resolve(&self, target: Target) -> Result<ResolvedTarget> {
        match target {
            Target::Vertex(v) => {
                let point = *self
                    .vertices
                    .get(v)
                    .ok_or_else(|| Error::PreconditionViolation(format!("vertex {v} out of range")))?;
                Ok(ResolvedTarget {
                    point,
                    anchor: (self.metric != Metric::Euclidean).then_some((v, 0.0)),
                })
            }
            Target::Point(point) => {
                if self.metric == Metric::Euclidean {
                    return Ok(ResolvedTarget { point, anchor: None });
                }
                let (v, hop) = self
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(i, q)| (i, q.dist(&point)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .ok_or_else(|| Error::DisconnectedGraph("graph has no vertices".into()))?;
                Ok(ResolvedTarget {
                    point,
                    anchor: Some((v, hop)),
                })
            }
        }
    }

    /// Distance from site `s` to a resolved target.
    #[inline]
    pub fn dist_to(&self, s: usize, target: &ResolvedTarget) -> f64 {
        match target.anchor {
            Some((v, hop)) => self.dist[s * self.vertices.len() + v] + hop,
            None => self.vertices[s].dist(&target.point),
        }
    }
}
