//! Accuracy of the Bayes-optimal rule on the synthetic sweep grid.
//!
//! Each sample is assigned to the class with the larger Gaussian
//! log-likelihood under the *true* class means and covariances, which is the
//! ceiling any learned classifier can reach on that dataset.
//!
//!     cargo run --release -p graphrel --example bayes_accuracy [samples_per_class] [seed]

use graphrel::data::{gen_synthetic, SyntheticSpec};
use nalgebra::{DMatrix, DVector};

fn main() {
    let mut args = std::env::args().skip(1);
    let samples_per_class: usize = args.next().map_or(1000, |s| s.parse().expect("samples_per_class"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    println!("n,d,bayes_accuracy,eigenvalues_clipped");
    for &n in &[50usize, 100, 200, 400] {
        for &d in &[0.0, 0.5, 1.0, 2.0] {
            let spec = SyntheticSpec {
                n,
                centroid_distance: d,
                samples_per_class,
                seed,
                ..SyntheticSpec::default()
            };
            let data = gen_synthetic(&spec).expect("valid spec");
            let classes: Vec<_> = (0..2)
                .map(|k| {
                    let sigma = &data.covariances.classes[k];
                    let chol = DMatrix::from_row_slice(n, n, sigma.as_slice().unwrap())
                        .cholesky()
                        .expect("repaired covariance is positive definite");
                    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                    let mu = DVector::from_row_slice(data.means[k].as_slice().unwrap());
                    (chol, logdet, mu)
                })
                .collect();
            let correct = data
                .dataset
                .x
                .rows()
                .into_iter()
                .zip(&data.dataset.y)
                .filter(|(row, &label)| {
                    let v = DVector::from_iterator(n, row.iter().copied());
                    let ll: Vec<f64> = classes
                        .iter()
                        .map(|(chol, logdet, mu)| {
                            let r = &v - mu;
                            -0.5 * logdet - 0.5 * r.dot(&chol.solve(&r))
                        })
                        .collect();
                    usize::from(ll[1] > ll[0]) == label
                })
                .count();
            let clipped: usize = data.covariances.repairs.iter().map(|r| r.clipped).sum();
            println!("{n},{d},{:.4},{clipped}", correct as f64 / data.dataset.num_samples() as f64);
        }
    }
}
