use std::sync::Arc;

use ndarray::{Array2, Array3, ArrayView2, Axis};

use super::config::{ModelConfig, RelationKind};
use crate::error::{Error, Result};
use crate::graph::{build_coarsening_hierarchy, build_laplacian, lift_signal, CoarseningHierarchy, WeightedGraph};
use crate::layers::{
    avg_pool, avg_pool_backward, relu, relu_backward, Activation, BatchNormCache, BatchNormLayer,
    ChebCache, ChebConvLayer, Mlp, MlpCache,
};
use crate::numerics::{Checkpoint, NamedTensor, ParamTensor, SeededRng};
use crate::relation::{select_top_k_edges, RelationCache, RelationHead, VanillaCache, VanillaRn};

const PARAM_STREAM: u64 = 0x006d_6f64_656c;

/// One graph convolution layer: Chebyshev filtering, batch normalisation over
/// (vertex, channel) columns, ReLU, then pairwise average pooling.
#[derive(Debug, Clone)]
struct ConvBlock {
    conv: ChebConvLayer,
    bn: BatchNormLayer,
    real: Vec<bool>,
}

#[derive(Debug)]
struct BlockCache {
    cheb: ChebCache,
    bn: BatchNormCache,
    activated: Array2<f64>,
}

#[derive(Debug, Clone)]
enum RelationModule {
    None,
    Modified(RelationHead),
    Vanilla(VanillaRn),
}

#[derive(Debug)]
enum RelationModuleCache {
    None,
    Modified(RelationCache),
    Vanilla(VanillaCache),
}

/// Everything a forward pass produces.
#[derive(Debug, Clone)]
pub struct ModelOutput {
    /// `h(x) + RN(O)`, `P x C`.
    pub logits: Array2<f64>,
    /// Output of the convolution and fully connected stack alone.
    pub h_logits: Array2<f64>,
    /// Relation term, absent for the convolution-only model.
    pub relation: Option<Array2<f64>>,
    /// Post-pooling map of the last convolution layer, `P x n_L x F`; these
    /// are the relation network's objects.
    pub feature_map: Array3<f64>,
}

#[derive(Debug)]
pub struct ForwardCache {
    input_bn: BatchNormCache,
    blocks: Vec<BlockCache>,
    fc: MlpCache,
    relation: RelationModuleCache,
    samples: usize,
}

/// Graph convolution classifier with an additive relation term.
///
/// Pipeline: input batch norm → lift into padded vertex order →
/// `[cheb_conv → batch norm → ReLU → avg_pool]` per layer → flatten →
/// fully connected ReLU layers → linear class logits. The relation module
/// reads the last pooled map and its output is added to the logits.
#[derive(Debug, Clone)]
pub struct HybridModel {
    config: ModelConfig,
    hierarchy: Arc<CoarseningHierarchy>,
    classes: usize,
    input_bn: BatchNormLayer,
    blocks: Vec<ConvBlock>,
    fc: Mlp,
    relation: RelationModule,
}

impl HybridModel {
    /// Builds the coarsening hierarchy from `graph` and initialises every
    /// parameter from `config.seed`.
    pub fn new(graph: &WeightedGraph, classes: usize, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let hierarchy = build_coarsening_hierarchy(graph, config.num_conv_layers(), config.seed);
        Self::with_hierarchy(graph, Arc::new(hierarchy), classes, config)
    }

    pub fn with_hierarchy(
        graph: &WeightedGraph,
        hierarchy: Arc<CoarseningHierarchy>,
        classes: usize,
        config: &ModelConfig,
    ) -> Result<Self> {
        config.validate()?;
        if classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
        }
        let layers = config.num_conv_layers();
        if hierarchy.num_levels() != layers {
            return Err(Error::dims("hierarchy levels", layers, hierarchy.num_levels()));
        }
        if hierarchy.graph(0).num_vertices() != graph.num_vertices() {
            return Err(Error::dims("hierarchy vertices", graph.num_vertices(), hierarchy.graph(0).num_vertices()));
        }
        let mut rng = SeededRng::with_stream(config.seed, PARAM_STREAM);
        let n = graph.num_vertices();
        let input_bn = BatchNormLayer::new(n, config.bn_momentum, config.bn_eps);

        let mut blocks = Vec::with_capacity(layers);
        let mut fin = 1;
        for l in 0..layers {
            let lap = build_laplacian(&hierarchy.padded_graph(l)).rescaled()?;
            let fout = config.conv_filters[l];
            let conv = ChebConvLayer::new(Arc::new(lap), config.cheb_orders[l], fin, fout, config.conv_bias, &mut rng)?;
            let width = hierarchy.padded_len(l);
            blocks.push(ConvBlock {
                conv,
                bn: BatchNormLayer::new(width * fout, config.bn_momentum, config.bn_eps),
                real: hierarchy.real_mask(l),
            });
            fin = fout;
        }
        let objects = hierarchy.padded_len(layers);
        let flat = objects * fin;
        let fc = Mlp::new(flat, &config.fc_hidden, classes, Activation::None, &mut rng);
        let relation = match config.relation {
            RelationKind::None => RelationModule::None,
            RelationKind::Modified => {
                let sel = select_top_k_edges(graph, &hierarchy, config.kappa)?;
                RelationModule::Modified(RelationHead::new(&sel, objects, fin, &config.rn_hidden, classes, &mut rng)?)
            }
            RelationKind::Vanilla => RelationModule::Vanilla(VanillaRn::new(
                fin,
                &config.vanilla_g_hidden,
                config.vanilla_g_out,
                &config.vanilla_f_hidden,
                classes,
                config.pair_budget,
                &mut rng,
            )),
        };
        Ok(HybridModel {
            config: config.clone(),
            hierarchy,
            classes,
            input_bn,
            blocks,
            fc,
            relation,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn hierarchy(&self) -> &CoarseningHierarchy {
        &self.hierarchy
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_vertices(&self) -> usize {
        self.input_bn.features()
    }

    pub fn relation_head(&self) -> Option<&RelationHead> {
        match &self.relation {
            RelationModule::Modified(h) => Some(h),
            _ => None,
        }
    }

    pub fn relation_head_mut(&mut self) -> Option<&mut RelationHead> {
        match &mut self.relation {
            RelationModule::Modified(h) => Some(h),
            _ => None,
        }
    }

    /// Original vertices belonging to each coarse vertex of the last level.
    pub fn coarse_members(&self) -> Vec<Vec<usize>> {
        let h = &self.hierarchy;
        let mut out = vec![Vec::new(); h.padded_len(h.num_levels())];
        for v in 0..self.num_vertices() {
            out[h.coarse_id(v)].push(v);
        }
        out
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.num_vertices() {
            return Err(Error::dims("model input features", self.num_vertices(), x.ncols()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input"));
        }
        Ok(())
    }

    fn to_3d(x: Array2<f64>, n: usize) -> Array3<f64> {
        let p = x.nrows();
        let f = x.ncols() / n.max(1);
        x.into_shape_with_order((p, n, f)).expect("contiguous")
    }

    fn to_2d(x: Array3<f64>) -> Array2<f64> {
        let (p, n, f) = x.dim();
        x.as_standard_layout()
            .into_owned()
            .into_shape_with_order((p, n * f))
            .expect("contiguous")
    }

    /// Inference-mode forward pass (running batch-norm statistics).
    pub fn infer(&self, x: ArrayView2<f64>) -> Result<ModelOutput> {
        self.check_input(&x)?;
        let z = self.input_bn.forward_infer(x)?;
        let lifted = lift_signal(z.view(), &self.hierarchy)?;
        let mut a = Self::to_3d(lifted, self.hierarchy.padded_len(0));
        for block in &self.blocks {
            let c = block.conv.infer(a.view())?;
            let n = c.dim().1;
            let b = block.bn.forward_infer(Self::to_2d(c).view())?;
            a = avg_pool(Self::to_3d(relu(&b), n).view(), &block.real)?;
        }
        let h_logits = self.fc.infer(Self::to_2d(a.clone()).view())?;
        let relation = match &self.relation {
            RelationModule::None => None,
            RelationModule::Modified(h) => Some(h.infer(a.view())?),
            RelationModule::Vanilla(v) => Some(v.infer(a.view())?),
        };
        Ok(Self::assemble(h_logits, relation, a))
    }

    /// Training-mode forward pass; updates batch-norm running statistics.
    pub fn forward_train(&mut self, x: ArrayView2<f64>) -> Result<(ModelOutput, ForwardCache)> {
        self.check_input(&x)?;
        let samples = x.nrows();
        let (z, input_bn) = self.input_bn.forward_train(x)?;
        let lifted = lift_signal(z.view(), &self.hierarchy)?;
        let mut a = Self::to_3d(lifted, self.hierarchy.padded_len(0));
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &mut self.blocks {
            let (c, cheb) = block.conv.forward(a.view())?;
            let n = c.dim().1;
            let (b, bn) = block.bn.forward_train(Self::to_2d(c).view())?;
            let activated = relu(&b);
            a = avg_pool(Self::to_3d(activated.clone(), n).view(), &block.real)?;
            caches.push(BlockCache { cheb, bn, activated });
        }
        let (h_logits, fc) = self.fc.forward(Self::to_2d(a.clone()))?;
        let (relation, rel_cache) = match &self.relation {
            RelationModule::None => (None, RelationModuleCache::None),
            RelationModule::Modified(h) => {
                let (y, c) = h.forward(a.view())?;
                (Some(y), RelationModuleCache::Modified(c))
            }
            RelationModule::Vanilla(v) => {
                let (y, c) = v.forward(a.view())?;
                (Some(y), RelationModuleCache::Vanilla(c))
            }
        };
        Ok((
            Self::assemble(h_logits, relation, a),
            ForwardCache {
                input_bn,
                blocks: caches,
                fc,
                relation: rel_cache,
                samples,
            },
        ))
    }

    fn assemble(h_logits: Array2<f64>, relation: Option<Array2<f64>>, feature_map: Array3<f64>) -> ModelOutput {
        let logits = match &relation {
            Some(r) => &h_logits + r,
            None => h_logits.clone(),
        };
        ModelOutput {
            logits,
            h_logits,
            relation,
            feature_map,
        }
    }

    /// Accumulates parameter gradients for `dlogits = dLoss/dlogits` and
    /// returns the gradient with respect to the input batch.
    ///
    /// Because the logits are a sum, `dlogits` flows unchanged into both the
    /// fully connected stack and the relation module; their gradients with
    /// respect to the shared feature map are added.
    pub fn backward(&mut self, cache: ForwardCache, dlogits: Array2<f64>) -> Result<Array2<f64>> {
        let p = cache.samples;
        if dlogits.dim() != (p, self.classes) {
            return Err(Error::dims("model upstream gradient", p * self.classes, dlogits.len()));
        }
        let objects = self.hierarchy.padded_len(self.blocks.len());
        let dflat = self.fc.backward(cache.fc, dlogits.clone())?;
        let mut da = Self::to_3d(dflat, objects);
        match (&mut self.relation, cache.relation) {
            (RelationModule::None, RelationModuleCache::None) => {}
            (RelationModule::Modified(h), RelationModuleCache::Modified(c)) => da += &h.backward(c, dlogits)?,
            (RelationModule::Vanilla(v), RelationModuleCache::Vanilla(c)) => da += &v.backward(c, dlogits)?,
            _ => unreachable!("cache produced by this model"),
        }
        for (block, bc) in self.blocks.iter_mut().zip(cache.blocks).rev() {
            let n = block.real.len();
            let mut d = Self::to_2d(avg_pool_backward(da.view(), &block.real)?);
            relu_backward(&bc.activated, &mut d);
            let dc = block.bn.backward(bc.bn, d.view())?;
            da = block.conv.backward(bc.cheb, Self::to_3d(dc, n).view())?;
        }
        // Undo the padded lift: fake slots had no source.
        let dlift = da.index_axis_move(Axis(2), 0);
        let mut dz = Array2::zeros((p, self.num_vertices()));
        for (s, v) in self.hierarchy.padded_order().iter().enumerate() {
            if let Some(v) = v {
                dz.column_mut(*v).assign(&dlift.column(s));
            }
        }
        self.input_bn.backward(cache.input_bn, dz.view())
    }

    /// Every trainable tensor with a stable name.
    pub fn params_mut(&mut self) -> Vec<(String, &mut ParamTensor)> {
        // The input shift is not trainable: every convolution is followed by
        // per-column batch norm, which cancels any constant input offset, so
        // its gradient is identically zero.
        let mut out: Vec<(String, &mut ParamTensor)> = vec![("input_bn.gamma".into(), &mut self.input_bn.gamma)];
        for (l, b) in self.blocks.iter_mut().enumerate() {
            out.push((format!("conv{l}.theta"), &mut b.conv.theta));
            if let Some(bias) = &mut b.conv.bias {
                out.push((format!("conv{l}.bias"), bias));
            }
            out.push((format!("conv{l}.bn.gamma"), &mut b.bn.gamma));
            out.push((format!("conv{l}.bn.beta"), &mut b.bn.beta));
        }
        for (l, layer) in self.fc.layers.iter_mut().enumerate() {
            out.push((format!("fc.fc{l}.weight"), &mut layer.weight));
            out.push((format!("fc.fc{l}.bias"), &mut layer.bias));
        }
        match &mut self.relation {
            RelationModule::None => {}
            RelationModule::Modified(h) => out.extend(h.params_mut()),
            RelationModule::Vanilla(v) => out.extend(v.params_mut()),
        }
        out
    }

    pub fn num_parameters(&mut self) -> usize {
        self.params_mut().iter().map(|(_, p)| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.params_mut() {
            p.zero_grad();
        }
    }

    fn batch_norms_mut(&mut self) -> Vec<(String, &mut BatchNormLayer)> {
        let mut out = vec![("input_bn".to_string(), &mut self.input_bn)];
        for (l, b) in self.blocks.iter_mut().enumerate() {
            out.push((format!("conv{l}.bn"), &mut b.bn));
        }
        out
    }

    /// Trainable parameters plus batch-norm running statistics.
    pub fn to_checkpoint(&mut self) -> Checkpoint {
        let mut tensors: Vec<NamedTensor> = self
            .params_mut()
            .into_iter()
            .map(|(name, p)| NamedTensor {
                name,
                shape: p.shape().to_vec(),
                values: p.value.clone(),
            })
            .collect();
        for (name, bn) in self.batch_norms_mut() {
            for (suffix, v) in [("running_mean", &bn.running_mean), ("running_var", &bn.running_var)] {
                tensors.push(NamedTensor {
                    name: format!("{name}.{suffix}"),
                    shape: vec![v.len()],
                    values: v.clone(),
                });
            }
        }
        Checkpoint::new(tensors)
    }

    /// Loads every tensor of a checkpoint written by [`Self::to_checkpoint`]
    /// for a model of identical configuration.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        let fetch = |name: &str, shape: &[usize]| -> Result<Vec<f64>> {
            let t = ck
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))?;
            if t.shape != shape {
                return Err(Error::Checkpoint(format!(
                    "tensor `{name}` has shape {:?}, model expects {:?}",
                    t.shape, shape
                )));
            }
            Ok(t.values.clone())
        };
        for (name, p) in self.params_mut() {
            let v = fetch(&name, p.shape())?;
            p.set_value(&v)?;
        }
        for (name, bn) in self.batch_norms_mut() {
            let len = bn.running_mean.len();
            bn.running_mean = fetch(&format!("{name}.running_mean"), &[len])?;
            bn.running_var = fetch(&format!("{name}.running_var"), &[len])?;
        }
        Ok(())
    }
}
