use rand::seq::index::sample;
use rand::Rng;

use super::graph::{DomainGraph, ResolvedTarget};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionOptions {
    pub min_tile_size: usize,
    pub max_attempts: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            min_tile_size: 3,
            max_attempts: 100,
        }
    }
}

/// A Voronoi partition of the observed sites. Tile `k` is the cell of
/// `nuclei[k]`; all indices are graph site indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    nuclei: Vec<usize>,
    tiles: Vec<Vec<usize>>,
}

impl Partition {
    pub fn k(&self) -> usize {
        self.nuclei.len()
    }

    pub fn nuclei(&self) -> &[usize] {
        &self.nuclei
    }

    /// Member sites of each tile, in the order they appear in the data.
    pub fn tiles(&self) -> &[Vec<usize>] {
        &self.tiles
    }

    /// Positions (into the data list) of each tile's members.
    pub fn tile_positions(&self, data: &[usize]) -> Vec<Vec<usize>> {
        let mut pos = vec![Vec::new(); self.k()];
        let mut tile_of = std::collections::HashMap::with_capacity(data.len());
        for (k, t) in self.tiles.iter().enumerate() {
            for &s in t {
                tile_of.insert(s, k);
            }
        }
        for (i, s) in data.iter().enumerate() {
            if let Some(&k) = tile_of.get(s) {
                pos[k].push(i);
            }
        }
        pos
    }
}

fn nearest_nucleus(nuclei: &[usize], mut dist: impl FnMut(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, &c) in nuclei.iter().enumerate() {
        let d = dist(c);
        // Strict comparison keeps the lowest index on ties.
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// Draws `k` nuclei uniformly without replacement from `data` (site
/// indices) and assigns every data site to its nearest nucleus, redrawing
/// until each tile holds at least `min_tile_size` sites.
pub fn draw_partition<R: Rng + ?Sized>(
    graph: &DomainGraph,
    data: &[usize],
    k: usize,
    rng: &mut R,
    options: PartitionOptions,
) -> Result<Partition> {
    if k == 0 || k > data.len() {
        return Err(Error::PreconditionViolation(format!(
            "tile count {k} must lie in 1..={}",
            data.len()
        )));
    }
    for _ in 0..options.max_attempts.max(1) {
        let nuclei: Vec<usize> = sample(rng, data.len(), k).into_iter().map(|i| data[i]).collect();
        let mut tiles = vec![Vec::new(); k];
        for &s in data {
            tiles[nearest_nucleus(&nuclei, |c| graph.site_dist(c, s))].push(s);
        }
        if tiles.iter().all(|t| t.len() >= options.min_tile_size) {
            return Ok(Partition { nuclei, tiles });
        }
    }
    Err(Error::PartitionInfeasible(options.max_attempts))
}

/// Tile of the nucleus nearest to `target`, lowest index on ties.
pub fn assign_target(graph: &DomainGraph, partition: &Partition, target: &ResolvedTarget) -> usize {
    nearest_nucleus(&partition.nuclei, |c| graph.dist_to(c, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Point, SiteSet, Target};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid_graph(n: usize) -> DomainGraph {
        let pts: Vec<Point> = (0..n * n).map(|i| Point::new((i % n) as f64, (i / n) as f64)).collect();
        DomainGraph::euclidean(&SiteSet::from_points(&pts).unwrap())
    }

    #[test]
    fn single_tile() {
        let g = grid_graph(4);
        let data: Vec<usize> = (0..16).collect();
        let p = draw_partition(&g, &data, 1, &mut ChaCha8Rng::seed_from_u64(0), PartitionOptions::default()).unwrap();
        assert_eq!(p.tiles(), &[data.clone()]);
        let t = g.resolve(Target::Point(Point::new(100.0, -3.0))).unwrap();
        assert_eq!(assign_target(&g, &p, &t), 0);
    }

    #[test]
    fn every_site_its_own_tile() {
        let g = grid_graph(3);
        let data: Vec<usize> = (0..9).collect();
        let opts = PartitionOptions {
            min_tile_size: 1,
            ..Default::default()
        };
        let p = draw_partition(&g, &data, 9, &mut ChaCha8Rng::seed_from_u64(1), opts).unwrap();
        for (k, t) in p.tiles().iter().enumerate() {
            assert_eq!(t, &vec![p.nuclei()[k]]);
        }
    }

    #[test]
    fn nucleus_target_and_ties() {
        let pts = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 5.0)];
        let g = DomainGraph::euclidean(&SiteSet::from_points(&pts).unwrap());
        let opts = PartitionOptions {
            min_tile_size: 1,
            ..Default::default()
        };
        let p = draw_partition(&g, &[0, 1, 2], 2, &mut ChaCha8Rng::seed_from_u64(5), opts).unwrap();
        for (k, &c) in p.nuclei().iter().enumerate() {
            assert_eq!(assign_target(&g, &p, &g.resolve(Target::Vertex(c)).unwrap()), k);
        }
        let p = Partition {
            nuclei: vec![1, 0],
            tiles: vec![vec![1], vec![0]],
        };
        let mid = g.resolve(Target::Point(Point::new(1.0, 0.0))).unwrap();
        assert_eq!(assign_target(&g, &p, &mid), 0);
    }

    #[test]
    fn infeasible_partition() {
        let g = grid_graph(2);
        let r = draw_partition(&g, &[0, 1, 2, 3], 2, &mut ChaCha8Rng::seed_from_u64(0), PartitionOptions::default());
        assert_eq!(r, Err(Error::PartitionInfeasible(100)));
    }

    proptest! {
        #[test]
        fn tiles_are_voronoi_cells(seed in any::<u64>(), k in 1usize..8) {
            let g = grid_graph(6);
            let data: Vec<usize> = (0..36).filter(|i| i % 5 != 0).collect();
            let opts = PartitionOptions { min_tile_size: 1, max_attempts: 1 };
            let p = draw_partition(&g, &data, k, &mut ChaCha8Rng::seed_from_u64(seed), opts).unwrap();
            let again = draw_partition(&g, &data, k, &mut ChaCha8Rng::seed_from_u64(seed), opts).unwrap();
            prop_assert_eq!(&p, &again);
            let mut all: Vec<usize> = p.tiles().iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(&all, &data);
            for (k, t) in p.tiles().iter().enumerate() {
                prop_assert!(t.contains(&p.nuclei()[k]));
                for &s in t {
                    for &c in p.nuclei() {
                        prop_assert!(g.site_dist(s, p.nuclei()[k]) <= g.site_dist(s, c));
                    }
                }
            }
        }
    }
}
