//! Lawson–Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual: DVector<f64>,
}

/// Minimizes `||A x - b||` subject to `x >= 0`.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> NnlsSolution {
    let n = a.ncols();
    let tol = 1e-13 * a.amax().max(1.0) * b.amax().max(1.0) * (a.nrows().max(n) as f64);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut iter = 0;
    loop {
        let r = b - a * &x;
        let w = a.transpose() * &r;
        let candidate = (0..n).filter(|&k| !passive[k] && w[k] > tol).max_by(|&p, &q| w[p].total_cmp(&w[q]));
        let Some(t) = candidate else { break };
        if iter >= max_iter {
            break;
        }
        passive[t] = true;
        loop {
            iter += 1;
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let z_p = solve_passive(a, b, &idx);
            if idx.iter().zip(z_p.iter()).all(|(_, &z)| z > 0.0) {
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = z_p[k];
                }
                break;
            }
            // step back to the boundary and drop the blocking variables
            let mut alpha = 1.0f64;
            for (k, &i) in idx.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    let denom = x[i] - z_p[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (z_p[k] - x[i]);
                if x[i] <= 1e-14 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if iter >= max_iter {
                break;
            }
        }
    }
    let residual = b - a * &x;
    NnlsSolution { x, residual }
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(idx);
    let svd = sub.svd(true, true);
    svd.solve(b, 1e-12).unwrap_or_else(|_| DVector::zeros(idx.len()))
}
