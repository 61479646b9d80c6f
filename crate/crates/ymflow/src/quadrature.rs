//! Gauss-Jacobi and Gauss-Lobatto-Jacobi rules on `[-1, 1]` for weights
//! `(1+x)^beta`, plus Lagrange differentiation and interpolation on arbitrary nodes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Gauss-Jacobi nodes and weights for `(1-x)^alpha (1+x)^beta`, integer exponents,
/// via the Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(m: usize, alpha: u32, beta: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let (al, be) = (alpha as f64, beta as f64);
    let mut t = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let s = 2.0 * kf + al + be;
        t[(k, k)] = if k == 0 {
            (be - al) / (al + be + 2.0)
        } else {
            (be * be - al * al) / (s * (s + 2.0))
        };
        if k + 1 < m {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + al + be;
            let num = 4.0 * k1 * (k1 + al) * (k1 + be) * (k1 + al + be);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(al + be + 1.0) * factorial(alpha) * factorial(beta) / factorial(alpha + beta + 1);
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Legendre polynomials `P_0..P_{m-1}` at `x`.
fn legendre_all(m: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; m];
    if m > 0 {
        p[0] = 1.0;
    }
    if m > 1 {
        p[1] = x;
    }
    for k in 2..m {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
    }
    p
}

/// Gauss-Lobatto-Jacobi rule with `p + 1` nodes (both endpoints) for the weight
/// `(1+x)^beta`; exact for polynomials of degree `2p - 1`.
pub fn gauss_lobatto_jacobi(p: usize, beta: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 2);
    let (inner, _) = gauss_jacobi(p - 1, 1, beta + 1);
    let mut x = Vec::with_capacity(p + 1);
    x.push(-1.0);
    x.extend(inner);
    x.push(1.0);
    let m = p + 1;
    // moments of Legendre polynomials against (1+x)^beta, integrated exactly
    let (gx, gw) = gauss_jacobi(m + 4, 0, beta);
    let mut mom = DVector::<f64>::zeros(m);
    for (xi, wi) in gx.iter().zip(&gw) {
        let pl = legendre_all(m, *xi);
        for k in 0..m {
            mom[k] += wi * pl[k];
        }
    }
    let mut v = DMatrix::<f64>::zeros(m, m);
    for (i, xi) in x.iter().enumerate() {
        let pl = legendre_all(m, *xi);
        for k in 0..m {
            v[(k, i)] = pl[k];
        }
    }
    let w = v.lu().solve(&mom).expect("Lobatto nodes are distinct");
    (x, w.iter().copied().collect())
}

/// Barycentric weights of a node set.
pub fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            1.0 / x
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, xk)| x[i] - xk)
                .product::<f64>()
        })
        .collect()
}

/// Lagrange differentiation matrix on the given nodes.
pub fn diff_matrix(x: &[f64]) -> DMatrix<f64> {
    let m = x.len();
    let w = barycentric_weights(x);
    let mut d = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let mut diag = 0.0;
        for j in 0..m {
            if i != j {
                d[(i, j)] = w[j] / w[i] / (x[i] - x[j]);
                diag -= d[(i, j)];
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Lagrange basis values at `t` (barycentric form, exact at nodes).
pub fn lagrange_basis(x: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    if let Some(i) = x.iter().position(|&xi| xi == t) {
        let mut e = vec![0.0; x.len()];
        e[i] = 1.0;
        return e;
    }
    let terms: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| wi / (t - xi)).collect();
    let s: f64 = terms.iter().sum();
    terms.iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(x: &[f64], w: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        x.iter().zip(w).map(|(xi, wi)| wi * f(*xi)).sum()
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_jacobi(6, 0, 0);
        for k in 0..12 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((integrate(&x, &w, |t| t.powi(k)) - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn lobatto_jacobi_exactness() {
        for beta in [0u32, 6, 10] {
            let p = 10;
            let (x, w) = gauss_lobatto_jacobi(p, beta);
            assert_eq!(x.len(), p + 1);
            assert!(w.iter().all(|&v| v > 0.0));
            // int_{-1}^{1} (1+x)^(beta+k) dx = 2^(beta+k+1)/(beta+k+1)
            for k in 0..(2 * p) {
                let e = (beta as i32 + k as i32) as f64;
                let exact = 2f64.powf(e + 1.0) / (e + 1.0);
                let q = integrate(&x, &w, |t| (1.0 + t).powi(k as i32));
                assert!(((q - exact) / exact).abs() < 1e-12, "beta={beta} k={k}");
            }
        }
    }

    #[test]
    fn differentiation_is_exact_on_polynomials() {
        let (x, _) = gauss_lobatto_jacobi(8, 0);
        let d = diff_matrix(&x);
        let f = DVector::from_iterator(x.len(), x.iter().map(|t| t.powi(7) - 2.0 * t));
        let df = &d * f;
        for (i, t) in x.iter().enumerate() {
            assert!((df[i] - (7.0 * t.powi(6) - 2.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let (x, _) = gauss_lobatto_jacobi(6, 0);
        let bw = barycentric_weights(&x);
        for t in [-0.93, -0.1, 0.42, 0.999] {
            let l = lagrange_basis(&x, &bw, t);
            let v: f64 = l.iter().zip(&x).map(|(li, xi)| li * xi.powi(5)).sum();
            assert!((v - t.powi(5)).abs() < 1e-13);
        }
    }
}
