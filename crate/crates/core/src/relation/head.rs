use ndarray::{s, Array2, Array3, ArrayView3};
use rayon::prelude::*;

use super::{pair_input, EdgeSelection};
use crate::error::{Error, Result};
use crate::layers::{Activation, Mlp, MlpCache};
use crate::numerics::{ParamTensor, SeededRng};

/// Edge-selected relation head:
/// `RN(O) = sum_{(i,j)} eps_ij * g_ij(o_i ++ o_j)`.
///
/// Each selected pair owns a separate MLP `g_ij` (ReLU hidden layers, linear
/// output of class dimension) and one attention scalar `eps_ij`.
#[derive(Debug, Clone)]
pub struct RelationHead {
    pub pairs: Vec<(usize, usize)>,
    pub mlps: Vec<Mlp>,
    /// One attention scalar per pair, initialised to `1 / kappa`.
    pub epsilon: ParamTensor,
    num_objects: usize,
    object_dim: usize,
    classes: usize,
}

#[derive(Debug)]
pub struct RelationCache {
    outputs: Vec<Array2<f64>>,
    mlp_caches: Vec<MlpCache>,
    samples: usize,
}

impl RelationHead {
    pub fn new(
        selection: &EdgeSelection,
        num_objects: usize,
        object_dim: usize,
        hidden: &[usize],
        classes: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if selection.is_empty() {
            return Err(Error::NoEdges);
        }
        for &(i, j) in &selection.pairs {
            if i >= num_objects || j >= num_objects {
                return Err(Error::PairIndexOutOfRange(i, j, num_objects));
            }
        }
        let kappa = selection.len();
        let mlps = (0..kappa)
            .map(|_| Mlp::new(2 * object_dim, hidden, classes, Activation::None, rng))
            .collect();
        Ok(RelationHead {
            pairs: selection.pairs.clone(),
            mlps,
            epsilon: ParamTensor::filled(&[kappa], 1.0 / kappa as f64),
            num_objects,
            object_dim,
            classes,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    fn check(&self, objects: &ArrayView3<f64>) -> Result<()> {
        let (_, n, m) = objects.dim();
        if m != self.object_dim {
            return Err(Error::dims("relation object dim", self.object_dim, m));
        }
        if n != self.num_objects {
            return Err(Error::dims("relation object count", self.num_objects, n));
        }
        Ok(())
    }

    /// Per-pair MLP outputs `g_ij(o_i ++ o_j)`, each `P x C`.
    pub fn pair_outputs(&self, objects: ArrayView3<f64>) -> Result<Vec<Array2<f64>>> {
        self.check(&objects)?;
        self.pairs
            .par_iter()
            .zip(self.mlps.par_iter())
            .map(|(&(i, j), mlp)| mlp.infer(pair_input(&objects, i, j).view()))
            .collect()
    }

    fn combine(&self, outputs: &[Array2<f64>], samples: usize) -> Array2<f64> {
        let mut out = Array2::zeros((samples, self.classes));
        for (g, &eps) in outputs.iter().zip(&self.epsilon.value) {
            out.scaled_add(eps, g);
        }
        out
    }

    pub fn infer(&self, objects: ArrayView3<f64>) -> Result<Array2<f64>> {
        let outputs = self.pair_outputs(objects)?;
        Ok(self.combine(&outputs, objects.dim().0))
    }

    pub fn forward(&self, objects: ArrayView3<f64>) -> Result<(Array2<f64>, RelationCache)> {
        self.check(&objects)?;
        let results: Vec<(Array2<f64>, MlpCache)> = self
            .pairs
            .par_iter()
            .zip(self.mlps.par_iter())
            .map(|(&(i, j), mlp)| mlp.forward(pair_input(&objects, i, j)))
            .collect::<Result<_>>()?;
        let (outputs, mlp_caches): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let samples = objects.dim().0;
        let out = self.combine(&outputs, samples);
        Ok((
            out,
            RelationCache {
                outputs,
                mlp_caches,
                samples,
            },
        ))
    }

    /// Backward rule: `d eps_ij = <dout, g_ij>`, each MLP receives
    /// `eps_ij * dout`, and the input gradient is split back onto `o_i` and
    /// `o_j`. Object gradients are reduced in pair order.
    pub fn backward(&mut self, cache: RelationCache, dout: Array2<f64>) -> Result<Array3<f64>> {
        let p = cache.samples;
        if dout.dim() != (p, self.classes) {
            return Err(Error::dims("relation upstream gradient", p * self.classes, dout.len()));
        }
        for (g, out) in self.epsilon.grad.iter_mut().zip(&cache.outputs) {
            *g += (&dout * out).sum();
        }
        let eps = self.epsilon.value.clone();
        let dinputs: Vec<Array2<f64>> = self
            .mlps
            .par_iter_mut()
            .zip(cache.mlp_caches.into_par_iter())
            .zip(eps.par_iter())
            .map(|((mlp, c), &e)| mlp.backward(c, &dout * e))
            .collect::<Result<_>>()?;

        let m = self.object_dim;
        let mut dobj = Array3::zeros((p, self.num_objects, m));
        for (&(i, j), d) in self.pairs.iter().zip(&dinputs) {
            let mut oi = dobj.slice_mut(s![.., i, ..]);
            oi += &d.slice(s![.., ..m]);
            let mut oj = dobj.slice_mut(s![.., j, ..]);
            oj += &d.slice(s![.., m..]);
        }
        Ok(dobj)
    }

    pub fn params_mut(&mut self) -> Vec<(String, &mut ParamTensor)> {
        let mut out: Vec<(String, &mut ParamTensor)> = vec![("rn.epsilon".into(), &mut self.epsilon)];
        for (k, mlp) in self.mlps.iter_mut().enumerate() {
            for (l, layer) in mlp.layers.iter_mut().enumerate() {
                out.push((format!("rn.g{k}.fc{l}.weight"), &mut layer.weight));
                out.push((format!("rn.g{k}.fc{l}.bias"), &mut layer.bias));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;

    fn selection(pairs: &[(usize, usize)]) -> EdgeSelection {
        EdgeSelection {
            pairs: pairs.to_vec(),
            weights: vec![1.0; pairs.len()],
        }
    }

    fn objects(p: usize, n: usize, m: usize, rng: &mut SeededRng) -> Array3<f64> {
        Array3::from_shape_fn((p, n, m), |_| rng.normal())
    }

    #[test]
    fn zero_attention_gives_zero_output() {
        let mut rng = SeededRng::new(1);
        let mut head = RelationHead::new(&selection(&[(0, 1), (1, 2)]), 3, 4, &[5], 2, &mut rng).unwrap();
        head.epsilon.value = vec![0.0, 0.0];
        let out = head.infer(objects(3, 3, 4, &mut rng).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_sum_pair() {
        let mut rng = SeededRng::new(2);
        let mut head = RelationHead::new(&selection(&[(0, 2)]), 3, 2, &[], 1, &mut rng).unwrap();
        head.epsilon.value = vec![1.0];
        head.mlps[0].layers[0].weight.value = vec![1.0; 4];
        let o = objects(2, 3, 2, &mut rng);
        let out = head.infer(o.view()).unwrap();
        for s in 0..2 {
            let expect = o[[s, 0, 0]] + o[[s, 0, 1]] + o[[s, 2, 0]] + o[[s, 2, 1]];
            assert!((out[[s, 0]] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn superposition_of_independent_pairs() {
        let mut rng = SeededRng::new(3);
        let mut head = RelationHead::new(&selection(&[(0, 1), (3, 2)]), 4, 3, &[6], 3, &mut rng).unwrap();
        head.epsilon.value = vec![0.7, -1.3];
        let o = objects(5, 4, 3, &mut rng);
        let out = head.infer(o.view()).unwrap();
        let g1 = head.mlps[0].infer(pair_input(&o.view(), 0, 1).view()).unwrap();
        let g2 = head.mlps[1].infer(pair_input(&o.view(), 3, 2).view()).unwrap();
        let expect = g1 * 0.7 + g2 * -1.3;
        for (a, b) in out.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_attention() {
        let mut rng = SeededRng::new(4);
        let mut head = RelationHead::new(&selection(&[(0, 1), (1, 2), (0, 2)]), 3, 2, &[4], 2, &mut rng).unwrap();
        let o = objects(4, 3, 2, &mut rng);
        let a = head.infer(o.view()).unwrap();
        head.epsilon.value.iter_mut().for_each(|e| *e *= 2.0);
        let b = head.infer(o.view()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_pair_rejected() {
        let mut rng = SeededRng::new(5);
        assert!(matches!(
            RelationHead::new(&selection(&[(0, 3)]), 3, 2, &[], 2, &mut rng),
            Err(Error::PairIndexOutOfRange(0, 3, 3))
        ));
    }

    #[test]
    fn attention_gradient_is_pair_output() {
        let mut rng = SeededRng::new(6);
        let mut head = RelationHead::new(&selection(&[(0, 1), (2, 1)]), 3, 2, &[4], 2, &mut rng).unwrap();
        let o = objects(3, 3, 2, &mut rng);
        let (_, cache) = head.forward(o.view()).unwrap();
        // Loss = sum of one output column => d eps_k = sum over samples of g_k[:, 0].
        let mut dout = Array2::zeros((3, 2));
        dout.column_mut(0).fill(1.0);
        head.backward(cache, dout).unwrap();
        let g = head.pair_outputs(o.view()).unwrap();
        for k in 0..2 {
            let expect = g[k].column(0).sum();
            assert!((head.epsilon.grad[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = SeededRng::new(7);
        let base = RelationHead::new(&selection(&[(0, 1), (2, 0), (1, 2)]), 3, 2, &[5], 2, &mut rng).unwrap();
        let o = objects(4, 3, 2, &mut rng);
        let w = Array2::from_shape_fn((4, 2), |_| rng.normal());
        let mut b2 = base.clone();
        let sizes: Vec<usize> = b2.params_mut().iter().map(|(_, p)| p.len()).collect();
        let mut point: Vec<f64> = b2.params_mut().iter().flat_map(|(_, p)| p.value.clone()).collect();
        point.extend(o.iter());
        let r = grad_check(
            &point,
            |v| {
                let mut head = base.clone();
                let mut off = 0;
                for ((_, p), &s) in head.params_mut().into_iter().zip(&sizes) {
                    p.value.copy_from_slice(&v[off..off + s]);
                    off += s;
                }
                let ov = Array3::from_shape_vec((4, 3, 2), v[off..].to_vec()).unwrap();
                let (y, cache) = head.forward(ov.view()).unwrap();
                let loss = (&y * &w).sum();
                let dobj = head.backward(cache, w.clone()).unwrap();
                let mut g: Vec<f64> = head.params_mut().iter().flat_map(|(_, p)| p.grad.clone()).collect();
                g.extend(dobj.iter());
                (loss, g)
            },
            1e-5,
        );
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }
}
