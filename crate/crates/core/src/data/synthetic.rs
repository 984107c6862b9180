//! Two-class data that differ in covariance sign structure.
//!
//! A sparse template covariance `Σ` with unit diagonal is drawn first. Each
//! class then flips the sign of every off-diagonal entry independently with
//! probability 1/2 and the result is projected onto the positive-definite
//! cone by eigenvalue clipping. Class means are `0` and `d * u` for a random
//! unit vector `u`. The graph given to the model is the support of `Σ`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::numerics::SeededRng;

/// Eigenvalues below this floor are raised to it.
pub const EIGEN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub samples_per_class: usize,
    pub centroid_distance: f64,
    pub avg_degree: f64,
    pub entry_mean: f64,
    pub entry_sd: f64,
    /// Probability of zeroing an off-diagonal entry instead of keeping or
    /// flipping it. Zero reproduces the pure sign-flip construction.
    pub delete_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 100,
            samples_per_class: 1000,
            centroid_distance: 0.0,
            avg_degree: 10.0,
            entry_mean: 0.1,
            entry_sd: 0.1,
            delete_prob: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("synthetic n must be >= 2".into()));
        }
        if self.samples_per_class < 1 {
            return Err(Error::Config("samples_per_class must be >= 1".into()));
        }
        if !(self.centroid_distance >= 0.0) {
            return Err(Error::Config("centroid_distance must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.delete_prob) {
            return Err(Error::Config("delete_prob must be in [0, 1]".into()));
        }
        if !(self.avg_degree >= 0.0) || self.avg_degree >= self.n as f64 {
            return Err(Error::DegreeInfeasible {
                avg_degree: self.avg_degree,
                n: self.n,
            });
        }
        Ok(())
    }
}

/// Outcome of projecting a symmetric matrix onto eigenvalues `>= 1e-6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdRepair {
    pub clipped: usize,
    /// Largest amount any eigenvalue was raised by.
    pub max_clip: f64,
    pub min_eigenvalue_before: f64,
}

#[derive(Debug, Clone)]
pub struct CovariancePair {
    pub template: Array2<f64>,
    pub classes: [Array2<f64>; 2],
    pub repairs: [PsdRepair; 2],
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub graph: WeightedGraph,
    pub covariances: CovariancePair,
    pub means: [Array1<f64>; 2],
}

fn to_nalgebra(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn eigh(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let eig = SymmetricEigen::new(to_nalgebra(m));
    let n = m.nrows();
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
    (eig.eigenvalues.iter().copied().collect(), vecs)
}

/// `U diag(f(lambda)) U^T`.
fn reconstruct(vals: &[f64], vecs: &Array2<f64>) -> Array2<f64> {
    let scaled = vecs * &Array1::from(vals.to_vec());
    let mut m = scaled.dot(&vecs.t());
    symmetrize(&mut m);
    m
}

fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

/// Draws the template covariance: unit diagonal and `round(n * avg_degree / 2)`
/// off-diagonal pairs chosen uniformly, each `~ N(entry_mean, entry_sd)`.
pub fn gen_template_covariance(spec: &SyntheticSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = SeededRng::with_stream(spec.seed, 1);
    let total = n * (n - 1) / 2;
    let m = ((n as f64 * spec.avg_degree / 2.0).round() as usize).min(total);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(total);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    // Partial Fisher–Yates: the first m entries are a uniform sample.
    for k in 0..m {
        let r = k + rng.below(total - k);
        pairs.swap(k, r);
    }
    let mut sigma = Array2::eye(n);
    for &(i, j) in &pairs[..m] {
        let mut v = spec.entry_mean + spec.entry_sd * rng.normal();
        if v == 0.0 {
            v = f64::MIN_POSITIVE;
        }
        sigma[[i, j]] = v;
        sigma[[j, i]] = v;
    }
    Ok(sigma)
}

/// Raises eigenvalues below `1e-6` to `1e-6`. Matrices that need no
/// clipping are returned unchanged.
pub fn psd_repair(m: &Array2<f64>) -> (Array2<f64>, PsdRepair, Vec<f64>, Array2<f64>) {
    let (mut vals, vecs) = eigh(m);
    let min_before = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let mut report = PsdRepair {
        clipped: 0,
        max_clip: 0.0,
        min_eigenvalue_before: min_before,
    };
    for v in vals.iter_mut() {
        if *v < EIGEN_FLOOR {
            report.clipped += 1;
            report.max_clip = report.max_clip.max(EIGEN_FLOOR - *v);
            *v = EIGEN_FLOOR;
        }
    }
    let repaired = if report.clipped == 0 {
        m.clone()
    } else {
        reconstruct(&vals, &vecs)
    };
    (repaired, report, vals, vecs)
}

/// Builds both class covariances from the template: each off-diagonal pair
/// gets one symmetric draw, deleted with `delete_prob`, otherwise multiplied
/// by a uniform sign in `{-1, 1}`; then each matrix is repaired.
pub fn derive_class_covariances(template: &Array2<f64>, seed: u64, delete_prob: f64) -> CovariancePair {
    let n = template.nrows();
    let mut rng = SeededRng::with_stream(seed, 2);
    let mut classes = [template.clone(), template.clone()];
    let mut repairs = [PsdRepair {
        clipped: 0,
        max_clip: 0.0,
        min_eigenvalue_before: 0.0,
    }; 2];
    for (k, cov) in classes.iter_mut().enumerate() {
        for i in 0..n {
            for j in (i + 1)..n {
                if template[[i, j]] == 0.0 {
                    continue;
                }
                let factor = if delete_prob > 0.0 && rng.uniform() < delete_prob {
                    0.0
                } else {
                    rng.sign()
                };
                cov[[i, j]] = factor * template[[i, j]];
                cov[[j, i]] = cov[[i, j]];
            }
        }
        let (repaired, report, _, _) = psd_repair(cov);
        *cov = repaired;
        repairs[k] = report;
    }
    CovariancePair {
        template: template.clone(),
        classes,
        repairs,
    }
}

/// Edge `(i, j)` with weight `|sigma_ij|` for every non-zero off-diagonal.
pub fn covariance_to_graph(sigma: &Array2<f64>) -> Result<WeightedGraph> {
    let n = sigma.nrows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sigma[[i, j]];
            if v != 0.0 {
                edges.push((i, j, v.abs()));
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    WeightedGraph::new(n, edges)
}

/// Draws `samples_per_class` rows per class from `N(mu_k, Σ_k)` using the
/// symmetric square root of the repaired covariance. Class 0 rows come first.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let template = gen_template_covariance(spec)?;
    let covariances = derive_class_covariances(&template, spec.seed, spec.delete_prob);
    let graph = covariance_to_graph(&template)?;
    let n = spec.n;

    let mut dir_rng = SeededRng::with_stream(spec.seed, 3);
    let mut u = Array1::from_shape_fn(n, |_| dir_rng.normal());
    let norm = u.dot(&u).sqrt();
    u /= norm;
    let means = [Array1::zeros(n), u * spec.centroid_distance];

    let total = 2 * spec.samples_per_class;
    let mut x = Array2::zeros((total, n));
    for k in 0..2 {
        let (vals, vecs) = eigh(&covariances.classes[k]);
        let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
        let factor = reconstruct(&roots, &vecs);
        let mut rng = SeededRng::with_stream(spec.seed, 4 + k as u64);
        let z = Array2::from_shape_fn((spec.samples_per_class, n), |_| rng.normal());
        let block = z.dot(&factor) + &means[k];
        let start = k * spec.samples_per_class;
        x.slice_mut(ndarray::s![start..start + spec.samples_per_class, ..])
            .assign(&block);
    }
    let y = (0..total).map(|i| i / spec.samples_per_class).collect();
    let dataset = Dataset::new(
        x,
        y,
        (0..total).map(|i| format!("s{i:05}")).collect(),
        (0..n).map(|i| format!("g{i}")).collect(),
        vec!["class0".into(), "class1".into()],
    )?;
    Ok(SyntheticData {
        dataset,
        graph,
        covariances,
        means,
    })
}
