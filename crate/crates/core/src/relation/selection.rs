use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{CoarseningHierarchy, WeightedGraph};

/// Pairs of coarsest-level vertices chosen as relation objects, in
/// descending weight order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSelection {
    pub pairs: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
}

impl EdgeSelection {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Picks the `kappa` heaviest vertex pairs at the coarsest hierarchy level.
///
/// Every edge of the original graph is mapped through the cluster maps;
/// edges landing on the same coarse pair have their weights summed, and
/// edges whose endpoints fall in the same cluster are dropped. Pairs are
/// ordered by merged weight, descending, with ties broken by `(i, j)`.
pub fn select_top_k_edges(
    g: &WeightedGraph,
    hierarchy: &CoarseningHierarchy,
    kappa: usize,
) -> Result<EdgeSelection> {
    if kappa == 0 {
        return Err(Error::Config("kappa must be >= 1".into()));
    }
    if g.num_vertices() != hierarchy.graph(0).num_vertices() {
        return Err(Error::dims(
            "select_top_k_edges graph",
            hierarchy.graph(0).num_vertices(),
            g.num_vertices(),
        ));
    }
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in g.edges() {
        let (a, b) = (hierarchy.coarse_id(e.a), hierarchy.coarse_id(e.b));
        if a != b {
            *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += e.weight;
        }
    }
    if merged.is_empty() {
        return Err(Error::NoEdges);
    }
    let mut ranked: Vec<((usize, usize), f64)> = merged.into_iter().collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked.truncate(kappa);
    Ok(EdgeSelection {
        pairs: ranked.iter().map(|r| r.0).collect(),
        weights: ranked.iter().map(|r| r.1).collect(),
    })
}
