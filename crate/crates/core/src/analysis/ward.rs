use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Outcome of Ward agglomerative clustering cut at `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct WardResult {
    /// Cluster id per point; ids are numbered by first appearance in point order.
    pub assignments: Vec<usize>,
    /// Every merge of the full dendrogram as `(a, b, cost)`, in non-decreasing
    /// cost order. `a` and `b` are representative point indices and `cost` is
    /// the increase in within-cluster sum of squares.
    pub merges: Vec<(usize, usize, f64)>,
}

impl WardResult {
    pub fn merge_costs(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.2).collect()
    }
}

/// Ward-linkage agglomerative clustering.
///
/// Uses the nearest-neighbour chain algorithm with the Lance–Williams update,
/// which builds the same dendrogram as greedy global-minimum merging in
/// O(P²) time and memory. Distance ties go to the smaller index.
pub fn ward_cluster(points: ArrayView2<f64>, k: usize) -> Result<WardResult> {
    let p = points.nrows();
    if k == 0 || k > p {
        return Err(Error::Config(format!("ward_cluster needs 1 <= k <= {p}, got {k}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ward_cluster points"));
    }
    // Half squared distances: the Ward cost of merging two singletons.
    let mut d = vec![0.0f64; p * p];
    for i in 0..p {
        for j in (i + 1)..p {
            let s: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * p + j] = 0.5 * s;
            d[j * p + i] = 0.5 * s;
        }
    }
    let mut size = vec![1usize; p];
    let mut active = vec![true; p];
    let mut merges: Vec<(usize, usize, f64)> = Vec::with_capacity(p.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();

    while merges.len() + 1 < p {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("active cluster"));
        }
        let a = *chain.last().unwrap();
        let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..p {
            if j == a || !active[j] {
                continue;
            }
            let dj = d[a * p + j];
            if dj < best_d {
                best_d = dj;
                best = j;
            }
        }
        // Prefer the previous chain element on exact ties so the chain terminates.
        if let Some(pv) = prev {
            if d[a * p + pv] <= best_d {
                best = pv;
                best_d = d[a * p + pv];
            }
        }
        if Some(best) == prev {
            chain.pop();
            chain.pop();
            let (i, j) = (a.min(best), a.max(best));
            merges.push((i, j, best_d));
            let (ni, nj) = (size[i] as f64, size[j] as f64);
            let dij = d[i * p + j];
            for m in 0..p {
                if !active[m] || m == i || m == j {
                    continue;
                }
                let nm = size[m] as f64;
                let v = ((ni + nm) * d[i * p + m] + (nj + nm) * d[j * p + m] - nm * dij)
                    / (ni + nj + nm);
                d[i * p + m] = v;
                d[m * p + i] = v;
            }
            active[j] = false;
            size[i] += size[j];
        } else {
            chain.push(best);
        }
    }

    merges.sort_by(|x, y| x.2.total_cmp(&y.2));
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j, _) in merges.iter().take(p - k) {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let mut label_of_root = vec![usize::MAX; p];
    let mut next = 0;
    let assignments = (0..p)
        .map(|v| {
            let r = find(&mut parent, v);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect();
    Ok(WardResult { assignments, merges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;
    use ndarray::Array2;

    /// Greedy global-minimum Ward recomputed from centroids at every step.
    fn brute_force_costs(points: &Array2<f64>) -> Vec<f64> {
        let mut clusters: Vec<Vec<usize>> = (0..points.nrows()).map(|i| vec![i]).collect();
        let centroid = |c: &Vec<usize>| {
            let mut m = vec![0.0; points.ncols()];
            for &i in c {
                for (mj, v) in m.iter_mut().zip(points.row(i)) {
                    *mj += v / c.len() as f64;
                }
            }
            m
        };
        let mut costs = Vec::new();
        while clusters.len() > 1 {
            let mut best = (f64::INFINITY, 0, 0);
            for a in 0..clusters.len() {
                for b in (a + 1)..clusters.len() {
                    let (ca, cb) = (centroid(&clusters[a]), centroid(&clusters[b]));
                    let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
                    let dist: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y) * (x - y)).sum();
                    let cost = na * nb / (na + nb) * dist;
                    if cost < best.0 {
                        best = (cost, a, b);
                    }
                }
            }
            let moved = clusters.remove(best.2);
            clusters[best.1].extend(moved);
            costs.push(best.0);
        }
        costs
    }

    #[test]
    fn two_blobs_split_perfectly() {
        let mut rng = SeededRng::new(4);
        let pts = Array2::from_shape_fn((40, 3), |(i, _)| {
            (if i < 20 { 0.0 } else { 50.0 }) + 0.1 * rng.normal()
        });
        let r = ward_cluster(pts.view(), 2).unwrap();
        assert!(r.assignments[..20].iter().all(|&c| c == 0));
        assert!(r.assignments[20..].iter().all(|&c| c == 1));
    }

    #[test]
    fn k_equals_p_gives_singletons() {
        let pts = Array2::from_shape_fn((6, 2), |(i, j)| (i * 3 + j) as f64);
        let r = ward_cluster(pts.view(), 6).unwrap();
        assert_eq!(r.assignments, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn costs_monotone_and_match_greedy() {
        let mut rng = SeededRng::new(9);
        let pts = Array2::from_shape_fn((25, 4), |_| rng.normal());
        let r = ward_cluster(pts.view(), 1).unwrap();
        let costs = r.merge_costs();
        assert!(costs.windows(2).all(|w| w[0] <= w[1]));
        let oracle = brute_force_costs(&pts);
        for (a, b) in costs.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_k() {
        let pts = Array2::<f64>::zeros((3, 1));
        assert!(ward_cluster(pts.view(), 0).is_err());
        assert!(ward_cluster(pts.view(), 4).is_err());
    }
}
