use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::AdamConfig;

/// Which pairwise term is added to the convolutional logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    /// Edge-selected per-pair MLPs with attention scalars.
    Modified,
    /// Shared-MLP relation network over all ordered object pairs.
    Vanilla,
    /// Convolutional stack only.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F64,
}

/// Architecture, optimiser and schedule of one model.
///
/// The defaults describe the synthetic-data configuration: two graph
/// convolution layers with 32 filters each, Chebyshev orders 10 and 2,
/// pooling size 2, fully connected layers of 1024 and 512 units, and a
/// relation head over the top 200 edges with one hidden layer of 128 units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub conv_filters: Vec<usize>,
    pub cheb_orders: Vec<usize>,
    pub pool_size: usize,
    pub conv_bias: bool,
    pub fc_hidden: Vec<usize>,
    pub relation: RelationKind,
    pub kappa: usize,
    pub rn_hidden: Vec<usize>,
    pub vanilla_g_hidden: Vec<usize>,
    pub vanilla_g_out: usize,
    pub vanilla_f_hidden: Vec<usize>,
    pub pair_budget: usize,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    pub optimizer: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            conv_filters: vec![32, 32],
            cheb_orders: vec![10, 2],
            pool_size: 2,
            conv_bias: false,
            fc_hidden: vec![1024, 512],
            relation: RelationKind::Modified,
            kappa: 200,
            rn_hidden: vec![128],
            vanilla_g_hidden: vec![128],
            vanilla_g_out: 128,
            vanilla_f_hidden: vec![256],
            pair_budget: 10_000,
            bn_momentum: 0.9,
            bn_eps: 1e-5,
            optimizer: AdamConfig::default(),
            epochs: 200,
            batch_size: 64,
            seed: 0,
            precision: Precision::F64,
        }
    }
}

impl ModelConfig {
    pub fn synthetic() -> Self {
        Self::default()
    }

    /// Expression-data configuration: top 1000 edges, two hidden layers of
    /// 128 units per pair MLP.
    pub fn real() -> Self {
        ModelConfig {
            kappa: 1000,
            rn_hidden: vec![128, 128],
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "synthetic" => Ok(Self::synthetic()),
            "real" => Ok(Self::real()),
            other => Err(Error::Config(format!(
                "unknown model preset `{other}` (expected `synthetic` or `real`)"
            ))),
        }
    }

    pub fn with_relation(mut self, relation: RelationKind) -> Self {
        self.relation = relation;
        self
    }

    pub fn num_conv_layers(&self) -> usize {
        self.conv_filters.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.conv_filters.is_empty() {
            return bad("at least one convolution layer is required".into());
        }
        if self.conv_filters.len() != self.cheb_orders.len() {
            return bad(format!(
                "conv_filters has {} entries but cheb_orders has {}",
                self.conv_filters.len(),
                self.cheb_orders.len()
            ));
        }
        if self.cheb_orders.contains(&0) {
            return bad("Chebyshev orders must be >= 1".into());
        }
        if self.conv_filters.contains(&0) || self.fc_hidden.contains(&0) {
            return bad("layer widths must be >= 1".into());
        }
        if self.pool_size != 2 {
            return bad(format!("pool_size must be 2, got {}", self.pool_size));
        }
        if self.kappa == 0 {
            return bad("kappa must be >= 1".into());
        }
        if self.batch_size < 2 {
            return bad("batch_size must be >= 2 for batch normalisation".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || self.bn_eps <= 0.0 {
            return bad("bn_momentum must lie in [0, 1) and bn_eps must be > 0".into());
        }
        let o = &self.optimizer;
        if !(o.lr >= 0.0 && (0.0..1.0).contains(&o.beta1) && (0.0..1.0).contains(&o.beta2) && o.eps > 0.0) {
            return bad("optimizer needs lr >= 0, betas in [0, 1), eps > 0".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ModelConfig>(&text).unwrap(), c);
        ModelConfig::real().validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ModelConfig>(r#"{"epochz": 3}"#).is_err());
        let c: ModelConfig = serde_json::from_str(r#"{"epochs": 3}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.kappa, 200);
    }

    #[test]
    fn validation_errors() {
        let mut c = ModelConfig::default();
        c.cheb_orders = vec![3];
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.pool_size = 4;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.batch_size = 1;
        assert!(c.validate().is_err());
    }
}
