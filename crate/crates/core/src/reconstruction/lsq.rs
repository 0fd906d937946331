use nalgebra::DMatrix;

/// Relative singular-value cutoff for every least-squares solve.
pub const SVD_CUTOFF: f64 = 1e-12;

/// Minimum-norm pseudoinverse by SVD, dropping singular values below
/// `SVD_CUTOFF` times the largest. Returns the pseudoinverse and the
/// effective rank.
///
/// The SVD is a one-sided (Hestenes) Jacobi iteration: nalgebra's
/// Golub–Kahan SVD does not reproduce its input for some stencil matrices
/// with nearly equal singular values.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    if a.nrows() < a.ncols() {
        let (p, rank) = pseudo_inverse(&a.transpose());
        return (p.transpose(), rank);
    }
    let (w, v) = jacobi_svd(a.clone());
    let n = a.ncols();
    let sigma: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let eps = SVD_CUTOFF * smax;
    let mut pinv = DMatrix::zeros(n, a.nrows());
    let mut rank = 0;
    for k in 0..n {
        if sigma[k] > eps {
            rank += 1;
            // v_k u_kᵀ / σ_k with u_k = w_k / σ_k
            pinv += v.column(k) * w.column(k).transpose() / (sigma[k] * sigma[k]);
        }
    }
    (pinv, rank)
}

/// One-sided Jacobi: returns `(A V, V)` with orthogonal columns in `A V`.
fn jacobi_svd(mut w: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = w.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (x, y) = (m[(r, p)], m[(r, q)]);
        m[(r, p)] = c * x - s * y;
        m[(r, q)] = s * x + c * y;
    }
}
