//! Graclus-style greedy matching and the padded pooling hierarchy.
//!
//! Each coarsening level pairs vertices greedily on the normalized-cut score
//! `w_ij (1/d_i + 1/d_j)`. Unmatched vertices stay as singletons. To pool with
//! a fixed stride of 2, every level is laid out in a padded order where each
//! coarse vertex owns two consecutive slots; a singleton's second slot is a
//! fake vertex (`None`) that carries no signal.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use super::WeightedGraph;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// One level of the hierarchy: the graph at this level and the map from its
/// vertices to vertices of the next (coarser) level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseningLevel {
    pub graph: WeightedGraph,
    pub cluster_of: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseningHierarchy {
    levels: Vec<CoarseningLevel>,
    coarsest: WeightedGraph,
    /// `orders[l][slot]` is the level-`l` vertex at that padded slot.
    orders: Vec<Vec<Option<usize>>>,
}

/// One round of greedy matching. Vertices are visited in a seeded random
/// order; ties in the matching score go to the smallest neighbour index.
/// Coarse vertex ids follow the order in which clusters are formed.
pub fn graclus_coarsen(g: &WeightedGraph, rng: &mut SeededRng) -> (WeightedGraph, Vec<usize>) {
    let n = g.num_vertices();
    let adj = g.neighbors();
    let deg = g.degrees();
    let mut visit: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut visit);

    let mut cluster_of = vec![usize::MAX; n];
    let mut next = 0;
    for &v in &visit {
        if cluster_of[v] != usize::MAX {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for &(u, w) in &adj[v] {
            if cluster_of[u] != usize::MAX {
                continue;
            }
            let score = w * (1.0 / deg[v] + 1.0 / deg[u]);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((u, score));
            }
        }
        cluster_of[v] = next;
        if let Some((u, _)) = best {
            cluster_of[u] = next;
        }
        next += 1;
    }

    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in g.edges() {
        let (ca, cb) = (cluster_of[e.a], cluster_of[e.b]);
        if ca != cb {
            *merged.entry((ca.min(cb), ca.max(cb))).or_insert(0.0) += e.weight;
        }
    }
    let coarse = WeightedGraph::new(next, merged.into_iter().map(|((a, b), w)| (a, b, w)))
        .expect("coarse graph built from a valid graph is valid");
    (coarse, cluster_of)
}

/// Applies [`graclus_coarsen`] `num_levels` times and lays out the padded
/// slot orders. With `num_levels == 0` the hierarchy is the identity.
pub fn build_coarsening_hierarchy(
    g: &WeightedGraph,
    num_levels: usize,
    seed: u64,
) -> CoarseningHierarchy {
    let mut rng = SeededRng::new(seed);
    let mut levels = Vec::with_capacity(num_levels);
    let mut current = g.clone();
    for _ in 0..num_levels {
        let (coarse, cluster_of) = graclus_coarsen(&current, &mut rng);
        levels.push(CoarseningLevel {
            graph: current,
            cluster_of,
        });
        current = coarse;
    }

    let mut orders = vec![Vec::new(); num_levels + 1];
    orders[num_levels] = (0..current.num_vertices()).map(Some).collect();
    for l in (0..num_levels).rev() {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); orders_len(&levels, l, &current)];
        for (v, &c) in levels[l].cluster_of.iter().enumerate() {
            members[c].push(v);
        }
        let mut order = Vec::with_capacity(2 * orders[l + 1].len());
        for slot in &orders[l + 1] {
            match slot {
                Some(c) => {
                    let m = &members[*c];
                    order.push(Some(m[0]));
                    order.push(m.get(1).copied());
                }
                None => {
                    order.push(None);
                    order.push(None);
                }
            }
        }
        orders[l] = order;
    }

    CoarseningHierarchy {
        levels,
        coarsest: current,
        orders,
    }
}

fn orders_len(levels: &[CoarseningLevel], l: usize, coarsest: &WeightedGraph) -> usize {
    levels
        .get(l + 1)
        .map_or(coarsest.num_vertices(), |next| next.graph.num_vertices())
}

impl CoarseningHierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[CoarseningLevel] {
        &self.levels
    }

    /// Graph at `level` in its own (unpadded) vertex ids; `level` may equal
    /// `num_levels()` for the coarsest graph.
    pub fn graph(&self, level: usize) -> &WeightedGraph {
        self.levels
            .get(level)
            .map_or(&self.coarsest, |lv| &lv.graph)
    }

    pub fn coarsest(&self) -> &WeightedGraph {
        &self.coarsest
    }

    /// Padded slot order of the original vertices.
    pub fn padded_order(&self) -> &[Option<usize>] {
        &self.orders[0]
    }

    pub fn order(&self, level: usize) -> &[Option<usize>] {
        &self.orders[level]
    }

    pub fn padded_len(&self, level: usize) -> usize {
        self.orders[level].len()
    }

    /// `true` for real slots, `false` for fake ones.
    pub fn real_mask(&self, level: usize) -> Vec<bool> {
        self.orders[level].iter().map(Option::is_some).collect()
    }

    /// The level graph re-indexed into padded slots. Fake slots are isolated.
    pub fn padded_graph(&self, level: usize) -> WeightedGraph {
        let order = &self.orders[level];
        let g = self.graph(level);
        let mut slot_of = vec![usize::MAX; g.num_vertices()];
        for (s, v) in order.iter().enumerate() {
            if let Some(v) = v {
                slot_of[*v] = s;
            }
        }
        g.relabel(&slot_of, order.len())
            .expect("padded relabelling preserves validity")
    }

    /// Maps an original vertex to its vertex id at the coarsest level.
    pub fn coarse_id(&self, mut v: usize) -> usize {
        for lv in &self.levels {
            v = lv.cluster_of[v];
        }
        v
    }
}

/// Reorders the columns of `x` (samples x original vertices) into padded
/// slot order, writing zeros in fake slots.
pub fn lift_signal(x: ArrayView2<f64>, h: &CoarseningHierarchy) -> Result<Array2<f64>> {
    let n = h.graph(0).num_vertices();
    if x.ncols() != n {
        return Err(Error::dims("lift_signal columns", n, x.ncols()));
    }
    let order = h.padded_order();
    let mut out = Array2::zeros((x.nrows(), order.len()));
    for (s, v) in order.iter().enumerate() {
        if let Some(v) = v {
            out.column_mut(s).assign(&x.column(*v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn path(n: usize) -> WeightedGraph {
        WeightedGraph::new(n, (0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap()
    }

    #[test]
    fn p2_collapses_to_one_vertex() {
        let (coarse, map) = graclus_coarsen(&path(2), &mut SeededRng::new(0));
        assert_eq!(coarse.num_vertices(), 1);
        assert_eq!(map, vec![0, 0]);
    }

    #[test]
    fn edgeless_stays_singletons() {
        let (coarse, map) = graclus_coarsen(&WeightedGraph::edgeless(4), &mut SeededRng::new(9));
        assert_eq!(coarse.num_vertices(), 4);
        let mut sorted = map.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn p4_always_pairs_adjacent_vertices() {
        for seed in 0..50 {
            let (coarse, map) = graclus_coarsen(&path(4), &mut SeededRng::new(seed));
            assert_eq!(coarse.num_vertices(), 2, "seed {seed}");
            assert_eq!(map[0], map[1]);
            assert_eq!(map[2], map[3]);
        }
    }

    #[test]
    fn p4_one_level_has_no_fakes() {
        let h = build_coarsening_hierarchy(&path(4), 1, 1);
        assert_eq!(h.coarsest().num_vertices(), 2);
        assert_eq!(h.padded_order().len(), 4);
        assert!(h.padded_order().iter().all(Option::is_some));
    }

    #[test]
    fn p3_one_level_pads_the_singleton() {
        for seed in 0..20 {
            let h = build_coarsening_hierarchy(&path(3), 1, seed);
            assert_eq!(h.coarsest().num_vertices(), 2);
            let order = h.padded_order();
            assert_eq!(order.len(), 4);
            assert_eq!(order.iter().filter(|s| s.is_none()).count(), 1);
            // The fake slot is the second child of a singleton block.
            for block in order.chunks(2) {
                assert!(block[0].is_some());
            }
        }
    }

    #[test]
    fn single_vertex_gets_one_fake() {
        let h = build_coarsening_hierarchy(&WeightedGraph::edgeless(1), 1, 0);
        assert_eq!(h.padded_order(), &[Some(0), None]);
    }

    #[test]
    fn lift_p3_appends_zero_for_fake() {
        // Pin the hierarchy where (0, 1) are paired.
        let h = (0..100)
            .map(|s| build_coarsening_hierarchy(&path(3), 1, s))
            .find(|h| h.levels()[0].cluster_of[0] == h.levels()[0].cluster_of[1])
            .unwrap();
        let x = array![[1.0, 2.0, 3.0]];
        let lifted = lift_signal(x.view(), &h).unwrap();
        let order = h.padded_order();
        for (s, v) in order.iter().enumerate() {
            match v {
                Some(v) => assert_eq!(lifted[[0, s]], x[[0, *v]]),
                None => assert_eq!(lifted[[0, s]], 0.0),
            }
        }
        assert_eq!(lifted.row(0).sum(), 6.0);
        assert!(lift_signal(array![[1.0, 2.0]].view(), &h).is_err());
    }

    #[test]
    fn identity_hierarchy_lift_is_noop() {
        let g = path(5);
        let h = build_coarsening_hierarchy(&g, 0, 0);
        let x = array![[1.0, 2.0, 3.0, 4.0, 5.0], [5.0, 4.0, 3.0, 2.0, 1.0]];
        assert_eq!(lift_signal(x.view(), &h).unwrap(), x);
    }

    #[test]
    fn two_level_orders_are_consistent() {
        let mut rng = SeededRng::new(77);
        let mut edges = Vec::new();
        for i in 0..23 {
            for j in (i + 1)..23 {
                if rng.uniform() < 0.15 {
                    edges.push((i, j, rng.uniform() + 0.05));
                }
            }
        }
        let g = WeightedGraph::new(23, edges).unwrap();
        let h = build_coarsening_hierarchy(&g, 2, 4);
        assert_eq!(h.padded_len(0), 4 * h.coarsest().num_vertices());
        assert_eq!(h.padded_len(1), 2 * h.coarsest().num_vertices());
        // Every real vertex appears exactly once at each level.
        for l in 0..=2 {
            let mut seen: Vec<usize> = h.order(l).iter().flatten().copied().collect();
            seen.sort();
            assert_eq!(seen, (0..h.graph(l).num_vertices()).collect::<Vec<_>>());
        }
        // Slot s at level 0 belongs to slot s/2 at level 1.
        for (s, v) in h.order(0).iter().enumerate() {
            if let Some(v) = v {
                assert_eq!(h.order(1)[s / 2], Some(h.levels()[0].cluster_of[*v]));
            }
        }
        assert_eq!(h, build_coarsening_hierarchy(&g, 2, 4));
    }
}
