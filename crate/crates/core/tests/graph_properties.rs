use graphrel::graph::{build_coarsening_hierarchy, graclus_coarsen, lift_signal, WeightedGraph};
use graphrel::layers::avg_pool;
use graphrel::numerics::SeededRng;
use ndarray::{Array2, Array3};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = WeightedGraph> {
    (2usize..40).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(proptest::option::weighted(0.2, 0.01f64..5.0), pairs).prop_map(
            move |ws| {
                let mut edges = Vec::new();
                let mut k = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if let Some(w) = ws[k] {
                            edges.push((i, j, w));
                        }
                        k += 1;
                    }
                }
                WeightedGraph::new(n, edges).unwrap()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coarse_weight_is_crossing_weight(g in graph_strategy(), seed in any::<u64>()) {
        let (coarse, cluster_of) = graclus_coarsen(&g, &mut SeededRng::new(seed));
        let crossing: f64 = g
            .edges()
            .iter()
            .filter(|e| cluster_of[e.a] != cluster_of[e.b])
            .map(|e| e.weight)
            .sum();
        prop_assert!((coarse.total_weight() - crossing).abs() <= 1e-12 * crossing.max(1.0));
    }

    #[test]
    fn clusters_have_one_or_two_members(g in graph_strategy(), seed in any::<u64>()) {
        let (coarse, cluster_of) = graclus_coarsen(&g, &mut SeededRng::new(seed));
        let mut sizes = vec![0usize; coarse.num_vertices()];
        for &c in &cluster_of {
            sizes[c] += 1;
        }
        prop_assert!(sizes.iter().all(|&s| s == 1 || s == 2));
        // a merged pair must be adjacent in the fine graph
        let adjacent = |a: usize, b: usize| g.edges().iter().any(|e| (e.a, e.b) == (a.min(b), a.max(b)));
        for c in 0..coarse.num_vertices() {
            let m: Vec<usize> = (0..cluster_of.len()).filter(|&v| cluster_of[v] == c).collect();
            if m.len() == 2 {
                prop_assert!(adjacent(m[0], m[1]));
            }
        }
    }

    #[test]
    fn pooling_a_constant_is_exact(g in graph_strategy(), levels in 1usize..4, c in -1e3f64..1e3) {
        let h = build_coarsening_hierarchy(&g, levels, 11);
        let x = Array2::from_elem((2, g.num_vertices()), c);
        let lifted = lift_signal(x.view(), &h).unwrap();
        let mut map = Array3::from_shape_vec((2, lifted.ncols(), 1), lifted.into_raw_vec_and_offset().0).unwrap();
        for l in 0..levels {
            map = avg_pool(map.view(), &h.real_mask(l)).unwrap();
            for (slot, real) in h.real_mask(l + 1).into_iter().enumerate() {
                if real {
                    prop_assert_eq!(map[[0, slot, 0]], c);
                    prop_assert_eq!(map[[1, slot, 0]], c);
                } else {
                    prop_assert_eq!(map[[0, slot, 0]], 0.0);
                }
            }
        }
    }
}

#[test]
fn padded_graph_keeps_weight_and_isolates_fakes() {
    let mut rng = SeededRng::new(5);
    let edges: Vec<(usize, usize, f64)> = (0..14).map(|i| (i, (i + 1 + rng.below(3)) % 15, 1.0)).filter(|e| e.0 != e.1).collect();
    let g = WeightedGraph::new(15, edges).unwrap();
    let h = build_coarsening_hierarchy(&g, 2, 3);
    for l in 0..=2 {
        let padded = h.padded_graph(l);
        assert!((padded.total_weight() - h.graph(l).total_weight()).abs() < 1e-12);
        let mask = h.real_mask(l);
        for e in padded.edges() {
            assert!(mask[e.a] && mask[e.b]);
        }
        assert_eq!(h.padded_len(l), h.padded_len(2) << (2 - l));
    }
}
