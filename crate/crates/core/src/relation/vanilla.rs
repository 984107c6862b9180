use ndarray::{s, Array2, Array3, ArrayView3, Axis};

use crate::error::{Error, Result};
use crate::layers::{Activation, Mlp, MlpCache};
use crate::numerics::{ParamTensor, SeededRng};

/// Shared-MLP relation network `f(sum_{i != j} g(o_i ++ o_j))` over every
/// ordered pair of objects.
#[derive(Debug, Clone)]
pub struct VanillaRn {
    pub g: Mlp,
    pub f: Mlp,
    object_dim: usize,
    /// Upper bound on `n_objects^2`.
    pub pair_budget: usize,
}

#[derive(Debug)]
pub struct VanillaCache {
    g_cache: MlpCache,
    f_cache: MlpCache,
    samples: usize,
    objects: usize,
}

impl VanillaRn {
    /// `g`: `2m -> g_hidden.. -> g_out` with ReLU throughout;
    /// `f`: `g_out -> f_hidden.. -> classes` with a linear output.
    pub fn new(
        object_dim: usize,
        g_hidden: &[usize],
        g_out: usize,
        f_hidden: &[usize],
        classes: usize,
        pair_budget: usize,
        rng: &mut SeededRng,
    ) -> Self {
        VanillaRn {
            g: Mlp::new(2 * object_dim, g_hidden, g_out, Activation::Relu, rng),
            f: Mlp::new(g_out, f_hidden, classes, Activation::None, rng),
            object_dim,
            pair_budget,
        }
    }

    fn pair_batch(&self, objects: &ArrayView3<f64>) -> Result<Array2<f64>> {
        let (p, n, m) = objects.dim();
        if m != self.object_dim {
            return Err(Error::dims("vanilla_rn object dim", self.object_dim, m));
        }
        if n * n > self.pair_budget {
            return Err(Error::PairBudgetExceeded {
                pairs: n * n,
                budget: self.pair_budget,
            });
        }
        let npairs = n * (n - 1);
        let mut x = Array2::zeros((p * npairs, 2 * m));
        for s in 0..p {
            let mut q = 0;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut row = x.row_mut(s * npairs + q);
                    row.slice_mut(s![..m]).assign(&objects.slice(s![s, i, ..]));
                    row.slice_mut(s![m..]).assign(&objects.slice(s![s, j, ..]));
                    q += 1;
                }
            }
        }
        Ok(x)
    }

    fn sum_pairs(g: &Array2<f64>, samples: usize) -> Array2<f64> {
        let npairs = g.nrows() / samples.max(1);
        let width = g.ncols();
        let mut out = Array2::zeros((samples, width));
        for s in 0..samples {
            out.row_mut(s)
                .assign(&g.slice(s![s * npairs..(s + 1) * npairs, ..]).sum_axis(Axis(0)));
        }
        out
    }

    pub fn infer(&self, objects: ArrayView3<f64>) -> Result<Array2<f64>> {
        let x = self.pair_batch(&objects)?;
        let g = self.g.infer(x.view())?;
        self.f.infer(Self::sum_pairs(&g, objects.dim().0).view())
    }

    pub fn forward(&self, objects: ArrayView3<f64>) -> Result<(Array2<f64>, VanillaCache)> {
        let x = self.pair_batch(&objects)?;
        let (p, n, _) = objects.dim();
        let (g, g_cache) = self.g.forward(x)?;
        let (y, f_cache) = self.f.forward(Self::sum_pairs(&g, p))?;
        Ok((
            y,
            VanillaCache {
                g_cache,
                f_cache,
                samples: p,
                objects: n,
            },
        ))
    }

    pub fn backward(&mut self, cache: VanillaCache, dout: Array2<f64>) -> Result<Array3<f64>> {
        let (p, n, m) = (cache.samples, cache.objects, self.object_dim);
        let dsum = self.f.backward(cache.f_cache, dout)?;
        let npairs = n * (n - 1);
        let mut dg = Array2::zeros((p * npairs, dsum.ncols()));
        for s in 0..p {
            for q in 0..npairs {
                dg.row_mut(s * npairs + q).assign(&dsum.row(s));
            }
        }
        let dx = self.g.backward(cache.g_cache, dg)?;
        let mut dobj = Array3::zeros((p, n, m));
        for s in 0..p {
            let mut q = 0;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let row = dx.row(s * npairs + q);
                    let mut oi = dobj.slice_mut(s![s, i, ..]);
                    oi += &row.slice(s![..m]);
                    let mut oj = dobj.slice_mut(s![s, j, ..]);
                    oj += &row.slice(s![m..]);
                    q += 1;
                }
            }
        }
        Ok(dobj)
    }

    pub fn params_mut(&mut self) -> Vec<(String, &mut ParamTensor)> {
        let mut out = Vec::new();
        for (name, mlp) in [("g", &mut self.g), ("f", &mut self.f)] {
            for (l, layer) in mlp.layers.iter_mut().enumerate() {
                out.push((format!("vrn.{name}.fc{l}.weight"), &mut layer.weight));
                out.push((format!("vrn.{name}.fc{l}.bias"), &mut layer.bias));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;

    #[test]
    fn constant_g_counts_ordered_pairs() {
        let mut rng = SeededRng::new(1);
        let mut rn = VanillaRn::new(2, &[], 3, &[], 3, 100, &mut rng);
        rn.g.layers[0].weight.value.iter_mut().for_each(|w| *w = 0.0);
        rn.g.layers[0].bias.value = vec![0.5, 1.0, 2.0];
        rn.f.layers[0].weight.value = Array2::<f64>::eye(3).into_raw_vec_and_offset().0;
        for n in [2usize, 5] {
            let o = Array3::from_shape_fn((2, n, 2), |_| rng.normal());
            let y = rn.infer(o.view()).unwrap();
            let count = (n * n - n) as f64;
            for s in 0..2 {
                assert!((y[[s, 0]] - 0.5 * count).abs() < 1e-12);
                assert!((y[[s, 2]] - 2.0 * count).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = SeededRng::new(2);
        let rn = VanillaRn::new(3, &[8], 6, &[5], 2, 100, &mut rng);
        let o = Array3::from_shape_fn((3, 5, 3), |_| rng.normal());
        let perm = [3, 0, 4, 1, 2];
        let op = Array3::from_shape_fn((3, 5, 3), |(s, i, c)| o[[s, perm[i], c]]);
        let a = rn.infer(o.view()).unwrap();
        let b = rn.infer(op.view()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn budget_guard() {
        let mut rng = SeededRng::new(3);
        let rn = VanillaRn::new(1, &[], 2, &[], 2, 8, &mut rng);
        let o = Array3::zeros((1, 3, 1));
        assert!(matches!(
            rn.infer(o.view()),
            Err(Error::PairBudgetExceeded { pairs: 9, budget: 8 })
        ));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = SeededRng::new(4);
        let base = VanillaRn::new(2, &[5], 4, &[3], 2, 100, &mut rng);
        let o = Array3::from_shape_fn((3, 4, 2), |_| rng.normal());
        let w = Array2::from_shape_fn((3, 2), |_| rng.normal());
        let mut b2 = base.clone();
        let sizes: Vec<usize> = b2.params_mut().iter().map(|(_, p)| p.len()).collect();
        let mut point: Vec<f64> = b2.params_mut().iter().flat_map(|(_, p)| p.value.clone()).collect();
        point.extend(o.iter());
        let r = grad_check(
            &point,
            |v| {
                let mut rn = base.clone();
                let mut off = 0;
                for ((_, p), &s) in rn.params_mut().into_iter().zip(&sizes) {
                    p.value.copy_from_slice(&v[off..off + s]);
                    off += s;
                }
                let ov = Array3::from_shape_vec((3, 4, 2), v[off..].to_vec()).unwrap();
                let (y, cache) = rn.forward(ov.view()).unwrap();
                let loss = (&y * &w).sum();
                let d = rn.backward(cache, w.clone()).unwrap();
                let mut g: Vec<f64> = rn.params_mut().iter().flat_map(|(_, p)| p.grad.clone()).collect();
                g.extend(d.iter());
                (loss, g)
            },
            1e-5,
        );
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }
}
