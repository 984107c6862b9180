//! Weighted graphs, combinatorial Laplacians and the coarsening hierarchy.

mod coarsen;
mod laplacian;
mod spectral;

pub use coarsen::{
    build_coarsening_hierarchy, graclus_coarsen, lift_signal, CoarseningHierarchy,
    CoarseningLevel,
};
pub use laplacian::{build_laplacian, LaplacianOperator, ScaledLaplacian};
pub use spectral::{spectral_filter_oracle, SpectralBasis};

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// One undirected edge, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Undirected graph with strictly positive edge weights.
///
/// The adjacency matrix is implied by the edge list and is symmetric by
/// construction: an edge `(a, b, w)` stands for both `A[a][b]` and `A[b][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates and builds a graph. Each unordered pair may appear once.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for {n} vertices"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {i}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has non-positive or non-finite weight {w}"
                )));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if !seen.insert((a, b)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            out.push(Edge { a, b, weight: w });
        }
        Ok(WeightedGraph { n, edges: out })
    }

    pub fn edgeless(n: usize) -> Self {
        WeightedGraph { n, edges: Vec::new() }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sum of edge weights with Neumaier compensation, so that totals over
    /// thousands of edges stay accurate to a few ulps.
    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.edges.iter().map(|e| e.weight))
    }

    /// Weighted degree of every vertex.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.a] += e.weight;
            d[e.b] += e.weight;
        }
        d
    }

    /// Adjacency lists sorted by neighbour index.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.a].push((e.b, e.weight));
            adj[e.b].push((e.a, e.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        adj
    }

    /// Re-indexes the graph into a larger vertex space: vertex `v` becomes
    /// `slot_of[v]`. Unused slots become isolated vertices.
    pub fn relabel(&self, slot_of: &[usize], new_n: usize) -> Result<Self> {
        if slot_of.len() != self.n {
            return Err(Error::dims("relabel", self.n, slot_of.len()));
        }
        WeightedGraph::new(
            new_n,
            self.edges
                .iter()
                .map(|e| (slot_of[e.a], slot_of[e.b], e.weight)),
        )
    }

    /// Parses a tab-separated edge list (`name_a<TAB>name_b<TAB>weight`).
    ///
    /// Vertex names get dense ids in first-seen order. Lines starting with `#`
    /// and blank lines are skipped. Repeated pairs (in either orientation) keep
    /// the largest weight; self-loops are ignored.
    pub fn parse_edge_list(text: &str, source: &Path) -> Result<(Vec<String>, Self)> {
        let mut names: Vec<String> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut order: Vec<(usize, usize)> = Vec::new();

        let parse_err = |line: usize, column: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            column,
            message,
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(
                    lineno + 1,
                    fields.len().min(3) + 1,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let w: f64 = fields[2].trim().parse().map_err(|_| {
                parse_err(lineno + 1, 3, format!("invalid weight `{}`", fields[2]))
            })?;
            if !(w.is_finite() && w > 0.0) {
                return Err(parse_err(
                    lineno + 1,
                    3,
                    format!("weight must be positive and finite, got {w}"),
                ));
            }
            let mut id_of = |name: &str| -> usize {
                if let Some(&id) = ids.get(name) {
                    return id;
                }
                let id = names.len();
                names.push(name.to_string());
                ids.insert(name.to_string(), id);
                id
            };
            let i = id_of(fields[0].trim());
            let j = id_of(fields[1].trim());
            if i == j {
                continue;
            }
            let key = (i.min(j), i.max(j));
            match weights.get_mut(&key) {
                Some(existing) => *existing = existing.max(w),
                None => {
                    weights.insert(key, w);
                    order.push(key);
                }
            }
        }
        let graph = WeightedGraph::new(
            names.len(),
            order.into_iter().map(|(a, b)| (a, b, weights[&(a, b)])),
        )?;
        Ok((names, graph))
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<(Vec<String>, Self)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text, path)
    }

    /// Writes the graph as a tab-separated edge list using `names` for vertices.
    pub fn write_edge_list(&self, names: &[String], path: impl AsRef<Path>) -> Result<()> {
        use std::fmt::Write as _;
        let path = path.as_ref();
        if names.len() != self.n {
            return Err(Error::dims("edge list names", self.n, names.len()));
        }
        let mut text = String::new();
        for e in &self.edges {
            let _ = writeln!(text, "{}\t{}\t{}", names[e.a], names[e.b], e.weight);
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Neumaier's compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        assert_eq!(compensated_sum([1e16, 1.0, -1e16]), 1.0);
        assert_eq!(compensated_sum([0.1; 10]), 1.0);
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(WeightedGraph::new(2, [(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, [(0, 2, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, [(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(2, [(0, 1, f64::NAN)]).is_err());
        assert!(WeightedGraph::new(2, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
    }

    #[test]
    fn edge_list_first_seen_ids_and_comments() {
        let text = "# header\nTP53\tMDM2\t0.9\nMDM2\tEGFR\t0.5\n\nEGFR\tTP53\t0.2\nMDM2\tTP53\t0.95\n";
        let (names, g) = WeightedGraph::parse_edge_list(text, Path::new("x.tsv")).unwrap();
        assert_eq!(names, ["TP53", "MDM2", "EGFR"]);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.edges()[0], Edge { a: 0, b: 1, weight: 0.95 });
    }

    #[test]
    fn edge_list_reports_line_and_column() {
        let text = "a\tb\t1\nb\tc\tx\n";
        match WeightedGraph::parse_edge_list(text, Path::new("e.tsv")) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
