use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

/// Mean cross-entropy of `softmax(logits)` against `labels`, and its
/// gradient `(softmax - onehot) / P` with respect to the logits.
pub fn softmax_cross_entropy(logits: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (p, c) = logits.dim();
    if labels.len() != p {
        return Err(Error::dims("softmax_cross_entropy labels", p, labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes: c,
        });
    }
    let mut grad = Array2::zeros((p, c));
    let mut loss = 0.0;
    for (s, row) in logits.rows().into_iter().enumerate() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[labels[s]];
        for k in 0..c {
            grad[[s, k]] = (row[k] - lse).exp() / p as f64;
        }
        grad[[s, labels[s]]] -= 1.0 / p as f64;
    }
    Ok((loss / p as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, SeededRng};
    use ndarray::array;

    #[test]
    fn uniform_logits_give_ln_c() {
        let (loss, _) = softmax_cross_entropy(Array2::zeros((3, 4)).view(), &[0, 1, 3]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn large_margin_drives_loss_to_zero() {
        let (loss, _) = softmax_cross_entropy(array![[800.0, 0.0]].view(), &[0]).unwrap();
        assert!(loss.abs() < 1e-300);
        let (loss, _) = softmax_cross_entropy(array![[-800.0, 0.0]].view(), &[0]).unwrap();
        assert!((loss - 800.0).abs() < 1e-9);
    }

    #[test]
    fn label_out_of_range() {
        assert!(matches!(
            softmax_cross_entropy(Array2::zeros((1, 2)).view(), &[2]),
            Err(Error::LabelOutOfRange { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax(array![[1.0, 2.0, 3.0], [1000.0, 0.0, -1000.0]].view());
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(5);
        let logits: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
        let labels = [2, 0, 1];
        let r = grad_check(
            &logits,
            |v| {
                let l = Array2::from_shape_vec((3, 4), v.to_vec()).unwrap();
                let (loss, g) = softmax_cross_entropy(l.view(), &labels).unwrap();
                (loss, g.into_raw_vec_and_offset().0)
            },
            1e-5,
        );
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }
}
