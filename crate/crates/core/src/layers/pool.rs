use ndarray::{Array3, ArrayView3};

use crate::error::{Error, Result};

/// Average pooling over consecutive vertex pairs of a `P x n' x F` map.
///
/// `real[s]` marks slot `s` as a real vertex. Fake slots are excluded from
/// the divisor, so a block with one real member returns that member's value;
/// a block with no real member yields zero.
pub fn avg_pool(x: ArrayView3<f64>, real: &[bool]) -> Result<Array3<f64>> {
    let (p, n, f) = x.dim();
    if real.len() != n {
        return Err(Error::dims("avg_pool mask", n, real.len()));
    }
    if n % 2 != 0 {
        return Err(Error::dims("avg_pool even vertex count", n + 1, n));
    }
    let mut out = Array3::zeros((p, n / 2, f));
    for b in 0..n / 2 {
        let members: Vec<usize> = (2 * b..2 * b + 2).filter(|&s| real[s]).collect();
        if members.is_empty() {
            continue;
        }
        let scale = 1.0 / members.len() as f64;
        for s in 0..p {
            for c in 0..f {
                let sum: f64 = members.iter().map(|&m| x[[s, m, c]]).sum();
                out[[s, b, c]] = sum * scale;
            }
        }
    }
    Ok(out)
}

/// Spreads each pooled gradient equally over the real members of its block.
pub fn avg_pool_backward(dy: ArrayView3<f64>, real: &[bool]) -> Result<Array3<f64>> {
    let (p, nb, f) = dy.dim();
    if real.len() != 2 * nb {
        return Err(Error::dims("avg_pool_backward mask", 2 * nb, real.len()));
    }
    let mut dx = Array3::zeros((p, 2 * nb, f));
    for b in 0..nb {
        let members: Vec<usize> = (2 * b..2 * b + 2).filter(|&s| real[s]).collect();
        if members.is_empty() {
            continue;
        }
        let scale = 1.0 / members.len() as f64;
        for s in 0..p {
            for c in 0..f {
                let g = dy[[s, b, c]] * scale;
                for &m in &members {
                    dx[[s, m, c]] = g;
                }
            }
        }
    }
    Ok(dx)
}
