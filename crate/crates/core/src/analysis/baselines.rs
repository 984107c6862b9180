use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Per-class variance floor.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Diagonal-covariance Gaussian naive Bayes.
#[derive(Debug, Clone)]
pub struct GaussianNb {
    log_prior: Vec<f64>,
    means: Array2<f64>,
    vars: Array2<f64>,
}

impl GaussianNb {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], classes: usize) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::dims("gaussian_nb labels", x.nrows(), y.len()));
        }
        let f = x.ncols();
        let mut counts = vec![0usize; classes];
        let mut means = Array2::<f64>::zeros((classes, f));
        for (row, &c) in x.rows().into_iter().zip(y) {
            if c >= classes {
                return Err(Error::LabelOutOfRange { label: c, classes });
            }
            counts[c] += 1;
            let mut m = means.row_mut(c);
            m += &row;
        }
        for c in 0..classes {
            if counts[c] > 0 {
                means.row_mut(c).mapv_inplace(|v| v / counts[c] as f64);
            }
        }
        let mut vars = Array2::<f64>::zeros((classes, f));
        for (row, &c) in x.rows().into_iter().zip(y) {
            let m = means.row(c);
            let mut v = vars.row_mut(c);
            for j in 0..f {
                v[j] += (row[j] - m[j]).powi(2);
            }
        }
        for c in 0..classes {
            let n = counts[c].max(1) as f64;
            vars.row_mut(c).mapv_inplace(|v| (v / n).max(VARIANCE_FLOOR));
        }
        let total = y.len() as f64;
        let log_prior = counts
            .iter()
            .map(|&n| if n == 0 { f64::NEG_INFINITY } else { (n as f64 / total).ln() })
            .collect();
        Ok(GaussianNb {
            log_prior,
            means,
            vars,
        })
    }

    fn log_joint(&self, row: ArrayView1<f64>, c: usize) -> f64 {
        let m = self.means.row(c);
        let v = self.vars.row(c);
        let mut ll = self.log_prior[c];
        for j in 0..row.len() {
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * v[j]).ln() + (row[j] - m[j]).powi(2) / v[j]);
        }
        ll
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.means.ncols() {
            return Err(Error::dims("gaussian_nb features", self.means.ncols(), x.ncols()));
        }
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                (0..self.log_prior.len())
                    .map(|c| (c, self.log_joint(row, c)))
                    .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0
            })
            .collect())
    }
}

pub fn gaussian_nb(
    train_x: ArrayView2<f64>,
    train_y: &[usize],
    test_x: ArrayView2<f64>,
    classes: usize,
) -> Result<Vec<usize>> {
    GaussianNb::fit(train_x, train_y, classes)?.predict(test_x)
}

/// k-nearest-neighbour majority vote under Euclidean distance.
///
/// Neighbours are ordered by distance, then by training index. A tied vote
/// goes to the tied class whose nearest member is closest.
pub fn knn(
    train_x: ArrayView2<f64>,
    train_y: &[usize],
    test_x: ArrayView2<f64>,
    k: usize,
    classes: usize,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::Config("knn k must be >= 1".into()));
    }
    if train_y.len() != train_x.nrows() {
        return Err(Error::dims("knn labels", train_x.nrows(), train_y.len()));
    }
    if test_x.ncols() != train_x.ncols() {
        return Err(Error::dims("knn features", train_x.ncols(), test_x.ncols()));
    }
    if train_x.nrows() == 0 {
        return Err(Error::Config("knn needs training samples".into()));
    }
    if let Some(&bad) = train_y.iter().find(|&&c| c >= classes) {
        return Err(Error::LabelOutOfRange { label: bad, classes });
    }
    let k = k.min(train_x.nrows());
    let mut out = Vec::with_capacity(test_x.nrows());
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train_x.nrows());
    for q in test_x.rows() {
        dist.clear();
        for (i, r) in train_x.rows().into_iter().enumerate() {
            let d: f64 = q.iter().zip(r.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            dist.push((d, i));
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; classes];
        let mut first_rank = vec![usize::MAX; classes];
        for (rank, &(_, i)) in dist[..k].iter().enumerate() {
            let c = train_y[i];
            votes[c] += 1;
            first_rank[c] = first_rank[c].min(rank);
        }
        let best = (0..classes)
            .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(first_rank[b].cmp(&first_rank[a])))
            .expect("classes > 0");
        out.push(best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;
    use ndarray::array;

    #[test]
    fn gnb_separable_one_dimensional() {
        let mut rng = SeededRng::new(1);
        let mk = |c: usize, rng: &mut SeededRng| (if c == 0 { -10.0 } else { 10.0 }) + rng.normal();
        let y: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((100, 1), |(i, _)| mk(y[i], &mut rng));
        let ty: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let tx = Array2::from_shape_fn((40, 1), |(i, _)| mk(ty[i], &mut rng));
        assert_eq!(gaussian_nb(x.view(), &y, tx.view(), 2).unwrap(), ty);
    }

    #[test]
    fn gnb_single_sample_per_class() {
        let x = array![[0.0, 1.0], [5.0, 5.0]];
        let pred = gaussian_nb(x.view(), &[0, 1], array![[0.1, 1.0], [5.0, 4.9]].view(), 2).unwrap();
        assert_eq!(pred, vec![0, 1]);
    }

    #[test]
    fn knn_exact_match() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]];
        let pred = knn(x.view(), &[2, 0, 1], array![[1.0, 1.0]].view(), 1, 3).unwrap();
        assert_eq!(pred, vec![0]);
    }

    #[test]
    fn knn_tie_goes_to_nearest() {
        let x = array![[0.0], [1.0], [3.0], [4.0]];
        let y = [0, 0, 1, 1];
        // k = 4: two votes each; the query at 2.6 is nearest to class 1's member at 3.
        assert_eq!(knn(x.view(), &y, array![[2.6]].view(), 4, 2).unwrap(), vec![1]);
        assert_eq!(knn(x.view(), &y, array![[1.4]].view(), 4, 2).unwrap(), vec![0]);
    }
}
