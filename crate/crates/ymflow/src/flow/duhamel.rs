//! Mode-wise variation of constants and the fixed-point construction of
//! solutions that converge to the soliton.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::equivariant::{ReducedOperator, RadialProfile, SpectralBasis};
use crate::error::{Error, Result};

/// Time grids for [`ModeSeries`].
pub struct TauGrid;

impl TauGrid {
    /// `m + 1` equispaced nodes on `[0, t_end]`.
    pub fn uniform(t_end: f64, m: usize) -> Vec<f64> {
        (0..=m).map(|k| t_end * k as f64 / m as f64).collect()
    }

    /// Equispaced nodes of spacing `du` on `[layer, t_end]`, preceded by a
    /// geometric initial layer `0, g0, g0 r, ...` whose last step matches `du`.
    pub fn layered(t_end: f64, du: f64, g0: f64, layer: f64) -> Result<Vec<f64>> {
        if !(g0 > 0.0 && g0 < layer && du > 0.0 && du < layer && layer < t_end) {
            return Err(Error::Domain(format!("inconsistent grid (t_end {t_end}, du {du}, g0 {g0}, layer {layer})")));
        }
        let ratio = 1.0 / (1.0 - du / layer);
        let mut tau = vec![0.0];
        let mut t = g0;
        while t < layer - 0.5 * du {
            tau.push(t);
            t *= ratio;
        }
        let m = ((t_end - layer) / du).round() as usize;
        tau.extend((0..=m).map(|k| layer + (t_end - layer) * k as f64 / m as f64));
        Ok(tau)
    }
}

/// Mode coefficients `h^j(tau_k)` on a time grid.
#[derive(Clone, Debug)]
pub struct ModeSeries {
    pub tau: Vec<f64>,
    /// Row `j`, column `k`.
    pub coeffs: DMatrix<f64>,
}

impl ModeSeries {
    pub fn new(tau: Vec<f64>, coeffs: DMatrix<f64>) -> Result<Self> {
        if tau.len() < 3 || tau[0] != 0.0 || tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("time grid must start at 0, increase, and have at least 3 nodes".into()));
        }
        if coeffs.ncols() != tau.len() || coeffs.nrows() == 0 {
            return Err(Error::Dimension(format!("{}x{} coefficients on {} times", coeffs.nrows(), coeffs.ncols(), tau.len())));
        }
        Ok(Self { tau, coeffs })
    }

    pub fn zeros(tau: Vec<f64>, modes: usize) -> Result<Self> {
        let c = DMatrix::zeros(modes, tau.len());
        Self::new(tau, c)
    }

    /// Samples `f(j, tau)`.
    pub fn from_fn(tau: Vec<f64>, modes: usize, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let c = DMatrix::from_fn(modes, tau.len(), |j, k| f(j, tau[k]));
        Self::new(tau, c)
    }

    pub fn modes(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn horizon(&self) -> f64 {
        *self.tau.last().unwrap()
    }

    /// Euclidean norm of the coefficients at node `k` (the weighted norm in an
    /// orthonormal basis).
    pub fn norm_at(&self, k: usize) -> f64 {
        self.coeffs.column(k).norm()
    }

    /// `max_k |c(tau_k)|`.
    pub fn sup_norm(&self) -> f64 {
        (0..self.tau.len()).map(|k| self.norm_at(k)).fold(0.0, f64::max)
    }

    /// `sup_k |a(tau_k) - b(tau_k)|`.
    pub fn distance(&self, other: &ModeSeries) -> f64 {
        (0..self.tau.len()).map(|k| (self.coeffs.column(k) - other.coeffs.column(k)).norm()).fold(0.0, f64::max)
    }

    /// Linear interpolation in time of every coefficient.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = match self.tau.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => return self.coeffs.column(k).iter().copied().collect(),
            Err(k) => k.clamp(1, self.tau.len() - 1),
        };
        let (a, b) = (self.tau[k - 1], self.tau[k]);
        let s = (t - a) / (b - a);
        (0..self.modes()).map(|j| (1.0 - s) * self.coeffs[(j, k - 1)] + s * self.coeffs[(j, k)]).collect()
    }
}

/// `psi_k(x) = int_0^1 e^{-x(1-u)} u^k du` for `k = 0, 1, 2` and `x >= 0`.
fn psi(x: f64) -> [f64; 3] {
    if x < 1.0 {
        // sum_m (-x)^m k! / (m + k + 1)!
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let kf: f64 = (1..=k).map(|v| v as f64).product();
            let mut term = kf / (1..=k + 1).map(|v| v as f64).product::<f64>();
            let mut s = term;
            for m in 1..40 {
                term *= -x / (m + k + 1) as f64;
                s += term;
                if term.abs() < 1e-18 * s.abs() {
                    break;
                }
            }
            *o = s;
        }
        out
    } else {
        let p0 = -(-x).exp_m1() / x;
        let p1 = (1.0 - p0) / x;
        let p2 = (1.0 - 2.0 * p1) / x;
        [p0, p1, p2]
    }
}

/// Weights `w_i` with `int_0^d e^{-lam (d - s)} p(s) ds = sum_i w_i p(s_i)` for
/// every quadratic `p`, nodes `s_i` in local coordinates.
fn exp_weights(lam: f64, d: f64, s: [f64; 3]) -> [f64; 3] {
    let p = psi(lam * d);
    let mu = [d * p[0], d * d * p[1], d * d * d * p[2]];
    let mut w = [0.0; 3];
    for i in 0..3 {
        let (a, b) = match i {
            0 => (s[1], s[2]),
            1 => (s[0], s[2]),
            _ => (s[0], s[1]),
        };
        let den = (s[i] - a) * (s[i] - b);
        w[i] = (mu[2] - (a + b) * mu[1] + a * b * mu[0]) / den;
    }
    w
}

/// Indices of the three interpolation nodes used on interval `[k, k+1]`.
fn stencil(k: usize, last: usize) -> [usize; 3] {
    if k + 2 <= last {
        [k, k + 1, k + 2]
    } else {
        [k - 1, k, k + 1]
    }
}

/// Duhamel solution of `u' = -lambda_j u + h^j` per mode: forward from
/// `u(0) = 0` for `lambda_j > 0`, backward from the horizon for `lambda_j <= 0`
/// (the tail beyond the horizon is dropped). Each step integrates the local
/// quadratic interpolant of `h` against the exact exponential.
///
/// Fails when the estimated dropped tail of a nonpositive mode exceeds
/// `tail_tol` times the largest source coefficient.
pub fn duhamel_solve(h: &ModeSeries, lambda: &[f64], tail_tol: f64) -> Result<ModeSeries> {
    if lambda.len() != h.modes() {
        return Err(Error::Dimension(format!("{} eigenvalues for {} modes", lambda.len(), h.modes())));
    }
    let tau = &h.tau;
    let last = tau.len() - 1;
    let scale = h.coeffs.amax();
    let mut u = DMatrix::<f64>::zeros(h.modes(), tau.len());
    for (j, &lam) in lambda.iter().enumerate() {
        if lam > 0.0 {
            for k in 0..last {
                let d = tau[k + 1] - tau[k];
                let st = stencil(k, last);
                let w = exp_weights(lam, d, st.map(|i| tau[i] - tau[k]));
                let src: f64 = (0..3).map(|i| w[i] * h.coeffs[(j, st[i])]).sum();
                u[(j, k + 1)] = (-lam * d).exp() * u[(j, k)] + src;
            }
        } else {
            let mu = -lam;
            let tail = tail_estimate(tau, h, j, mu);
            if tail > tail_tol * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Domain(format!(
                    "horizon {} too short: dropped tail {tail:.3e} in mode {j} (lambda = {lam})",
                    tau[last]
                )));
            }
            for k in (0..last).rev() {
                let d = tau[k + 1] - tau[k];
                let st = stencil(k, last);
                let w = exp_weights(mu, d, st.map(|i| tau[k + 1] - tau[i]));
                let src: f64 = (0..3).map(|i| w[i] * h.coeffs[(j, st[i])]).sum();
                u[(j, k)] = (-mu * d).exp() * u[(j, k + 1)] - src;
            }
        }
    }
    ModeSeries::new(tau.clone(), u)
}

/// `|int_T^inf e^{-mu (s - T)} h(s) ds|` assuming `h` continues with its measured
/// exponential decay over the last stretch of the grid.
fn tail_estimate(tau: &[f64], h: &ModeSeries, j: usize, mu: f64) -> f64 {
    let last = tau.len() - 1;
    let ht = h.coeffs[(j, last)].abs();
    if ht == 0.0 {
        return 0.0;
    }
    let back = tau.iter().position(|&t| t >= tau[last] - 1.0).unwrap_or(0).min(last - 1);
    let hb = h.coeffs[(j, back)].abs();
    let kappa = if hb > ht { (hb / ht).ln() / (tau[last] - tau[back]) } else { 0.0 };
    if mu + kappa <= 0.0 {
        f64::INFINITY
    } else {
        ht / (mu + kappa)
    }
}

/// Settings of [`picard_construct`].
#[derive(Clone, Debug, Serialize)]
pub struct PicardOptions {
    pub tau: Vec<f64>,
    /// Stop when the iteration gap falls below `tol` times `sup |iota|`.
    pub tol: f64,
    pub max_iter: usize,
    pub tail_tol: f64,
}

impl PicardOptions {
    /// Layered grid on `[0, 16]` with spacing `1/128` after an initial layer on `[0, 1/4]`.
    pub fn standard() -> Self {
        Self {
            tau: TauGrid::layered(16.0, 1.0 / 128.0, 1e-5, 0.25).expect("valid default grid"),
            tol: 1e-13,
            max_iter: 60,
            tail_tol: 1e-8,
        }
    }
}

/// Outcome of the fixed-point iteration.
#[derive(Clone, Debug, Serialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// `sup_tau |u_{k+1} - u_k|`.
    pub gaps: Vec<f64>,
    /// Ratios of consecutive gaps.
    pub contraction: Vec<f64>,
    /// `sup_tau |u - iota_+(u0)|`.
    pub correction: f64,
    pub iota_norm: f64,
    /// `|Pi_{>0}(u(0) - u0)|`.
    pub projection_defect: f64,
    pub converged: bool,
}

impl PicardReport {
    /// Largest observed contraction factor (0 for fewer than two gaps).
    pub fn max_contraction(&self) -> f64 {
        self.contraction.iter().copied().fold(0.0, f64::max)
    }
}

/// `iota_+(u0)`: the positive part of `u0` propagated by the linear semigroup.
pub fn iota_plus(basis: &SpectralBasis, u0: &RadialProfile, tau: &[f64]) -> Result<ModeSeries> {
    let c = basis.coefficients(&u0.values);
    ModeSeries::from_fn(tau.to_vec(), basis.len(), |j, t| {
        if basis.lambda[j] > 0.0 {
            c[j] * (-basis.lambda[j] * t).exp()
        } else {
            0.0
        }
    })
}

/// Mode coefficients of the reduced nonlinearity along a mode series.
pub fn nonlinear_modes(op: &ReducedOperator, basis: &SpectralBasis, u: &ModeSeries) -> Result<ModeSeries> {
    let v = &basis.xi * &u.coeffs;
    let f = basis.grid.sector_factor();
    let mut nv = DMatrix::<f64>::zeros(v.nrows(), v.ncols());
    for (i, c) in op.coefficients.iter().enumerate() {
        let w = basis.grid.mass[i] * f;
        for k in 0..v.ncols() {
            let x = v[(i, k)];
            nv[(i, k)] = w * x * x * (c.alpha2 + c.alpha3 * x);
        }
    }
    ModeSeries::new(u.tau.clone(), basis.xi.transpose() * nv)
}

/// Fixed point of `u = iota_+(u0) + Duhamel(N(u))` by Picard iteration in the
/// sup-in-time weighted norm. The basis should hold every mode of the grid.
pub fn picard_construct(
    op: &ReducedOperator,
    basis: &SpectralBasis,
    u0: &RadialProfile,
    opts: &PicardOptions,
) -> Result<(ModeSeries, PicardReport)> {
    let iota = iota_plus(basis, u0, &opts.tau)?;
    let iota_norm = iota.sup_norm();
    let mut u = iota.clone();
    let mut gaps = Vec::new();
    let mut contraction = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let h = nonlinear_modes(op, basis, &u)?;
        let mut next = duhamel_solve(&h, &basis.lambda, opts.tail_tol)?;
        next.coeffs += &iota.coeffs;
        let gap = next.distance(&u);
        if let Some(&prev) = gaps.last() {
            let ratio: f64 = gap / prev;
            if gap > opts.tol * iota_norm {
                contraction.push(ratio);
                if ratio >= 1.0 || !gap.is_finite() {
                    return Err(Error::Divergence(format!(
                        "contraction factor {ratio:.3} at iteration {}; initial data too large",
                        gaps.len() + 1
                    )));
                }
            }
        }
        gaps.push(gap);
        u = next;
        if gap <= opts.tol * iota_norm {
            converged = true;
            break;
        }
    }
    let c0 = basis.coefficients(&u0.values);
    let projection_defect = (0..basis.len())
        .filter(|&j| basis.lambda[j] > 0.0)
        .map(|j| (u.coeffs[(j, 0)] - c0[j]).powi(2))
        .sum::<f64>()
        .sqrt();
    let report = PicardReport {
        iterations: gaps.len(),
        correction: u.distance(&iota),
        iota_norm,
        projection_defect,
        converged,
        gaps,
        contraction,
    };
    if !converged {
        return Err(Error::Divergence(format!("no convergence in {} iterations: {:?}", opts.max_iter, report.gaps)));
    }
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_branches_agree() {
        for x in [0.999_999, 1.0] {
            let a = psi(x);
            let b = psi(x + 1e-9);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-8);
            }
        }
        assert_eq!(psi(0.0), [1.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn weights_integrate_quadratics() {
        let (lam, d) = (2.3, 0.4);
        let s = [0.0, 0.4, 0.9];
        let w = exp_weights(lam, d, s);
        // int_0^d e^{-lam(d-s)} s^2 ds by fine midpoint sum
        let n = 200_000;
        let exact: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * d / n as f64;
                (-lam * (d - x)).exp() * x * x * d / n as f64
            })
            .sum();
        let q: f64 = (0..3).map(|i| w[i] * s[i] * s[i]).sum();
        assert!((q - exact).abs() < 1e-10);
    }

    #[test]
    fn layered_grid_shape() {
        let t = TauGrid::layered(4.0, 0.05, 1e-4, 0.5).unwrap();
        assert_eq!(t[0], 0.0);
        assert!((t.last().unwrap() - 4.0).abs() < 1e-14);
        assert!(t.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] < 0.08));
        assert!(TauGrid::layered(4.0, 0.05, 1.0, 0.5).is_err());
    }
}
