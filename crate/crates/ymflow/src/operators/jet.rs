//! Second-order jets of so(n)-valued fields and closed-form builders for the
//! field shapes that occur in the equivariant sector.

use crate::liealg::{sigma, OneForm, SoMatrix};

/// Value, gradient and Hessian of one matrix-valued component.
#[derive(Clone, Debug)]
pub struct MatJet {
    pub value: SoMatrix,
    /// `grad[k] = d_k value`.
    pub grad: Vec<SoMatrix>,
    /// `hess[k][l] = d_k d_l value`.
    pub hess: Vec<Vec<SoMatrix>>,
}

impl MatJet {
    pub fn zeros(n: usize) -> Self {
        Self {
            value: SoMatrix::zeros(n),
            grad: vec![SoMatrix::zeros(n); n],
            hess: vec![vec![SoMatrix::zeros(n); n]; n],
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &MatJet) {
        self.value.axpy(s, &other.value);
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            a.axpy(s, b);
        }
        for (ra, rb) in self.hess.iter_mut().zip(&other.hess) {
            for (a, b) in ra.iter_mut().zip(rb) {
                a.axpy(s, b);
            }
        }
    }

    pub fn laplacian(&self) -> SoMatrix {
        let n = self.grad.len();
        let mut out = SoMatrix::zeros(n);
        for k in 0..n {
            out += &self.hess[k][k];
        }
        out
    }

    /// `sum_k y_k d_k value`.
    pub fn radial_derivative(&self, y: &[f64]) -> SoMatrix {
        let mut out = SoMatrix::zeros(self.value.dim());
        for (k, &yk) in y.iter().enumerate() {
            out.axpy(yk, &self.grad[k]);
        }
        out
    }
}

/// Second-order jet of an so(n)-valued 1-form: one [`MatJet`] per index `j`.
#[derive(Clone, Debug)]
pub struct OneFormJet {
    comps: Vec<MatJet>,
}

impl OneFormJet {
    pub fn zeros(n: usize) -> Self {
        Self { comps: vec![MatJet::zeros(n); n] }
    }

    pub fn from_components(comps: Vec<MatJet>) -> Self {
        let n = comps.len();
        assert!(comps.iter().all(|c| c.grad.len() == n), "component count equals n");
        Self { comps }
    }

    /// A jet with the given value and vanishing derivatives.
    pub fn constant(value: &OneForm) -> Self {
        let n = value.dim();
        let mut out = Self::zeros(n);
        for (c, v) in out.comps.iter_mut().zip(&value.comps) {
            c.value = v.clone();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, j: usize) -> &MatJet {
        &self.comps[j]
    }

    pub fn comp_mut(&mut self, j: usize) -> &mut MatJet {
        &mut self.comps[j]
    }

    /// `A_j`.
    pub fn value(&self, j: usize) -> &SoMatrix {
        &self.comps[j].value
    }

    /// `d_k A_j`.
    pub fn d(&self, k: usize, j: usize) -> &SoMatrix {
        &self.comps[j].grad[k]
    }

    /// `d_k d_l A_j`.
    pub fn dd(&self, k: usize, l: usize, j: usize) -> &SoMatrix {
        &self.comps[j].hess[k][l]
    }

    pub fn value_form(&self) -> OneForm {
        OneForm { comps: self.comps.iter().map(|c| c.value.clone()).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zeros(self.dim());
        out.axpy(s, self);
        out
    }

    pub fn axpy(&mut self, s: f64, other: &OneFormJet) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.axpy(s, b);
        }
    }

    pub fn add(&self, other: &OneFormJet) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Largest violation of `hess[k][l] = hess[l][k]`.
    pub fn hessian_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut d: f64 = 0.0;
        for c in &self.comps {
            for k in 0..n {
                for l in 0..k {
                    d = d.max((&c.hess[k][l] - &c.hess[l][k]).max_abs());
                }
            }
        }
        d
    }

    /// Maximum entrywise difference to another jet (value, gradient, Hessian).
    pub fn max_diff(&self, other: &OneFormJet) -> (f64, f64, f64) {
        let n = self.dim();
        let (mut dv, mut dg, mut dh): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for (a, b) in self.comps.iter().zip(&other.comps) {
            dv = dv.max((&a.value - &b.value).max_abs());
            for k in 0..n {
                dg = dg.max((&a.grad[k] - &b.grad[k]).max_abs());
                for l in 0..n {
                    dh = dh.max((&a.hess[k][l] - &b.hess[k][l]).max_abs());
                }
            }
        }
        (dv, dg, dh)
    }
}

/// Jet at `y` of a scalar function `f(|y|^2)`, from `f`, `f'`, `f''` in `s = |y|^2`.
#[derive(Clone, Debug)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

impl ScalarJet {
    pub fn of_square_radius(y: &[f64], f: f64, df: f64, ddf: f64) -> Self {
        let n = y.len();
        let grad = y.iter().map(|&yk| 2.0 * yk * df).collect();
        let hess = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        let d = if k == l { 2.0 * df } else { 0.0 };
                        d + 4.0 * y[k] * y[l] * ddf
                    })
                    .collect()
            })
            .collect();
        Self { value: f, grad, hess }
    }
}

/// Product rule `f * G` for a scalar jet and a matrix jet.
pub fn scalar_times(f: &ScalarJet, g: &MatJet) -> MatJet {
    let n = g.grad.len();
    let value = g.value.scale(f.value);
    let mut grad = Vec::with_capacity(n);
    for k in 0..n {
        let mut m = g.grad[k].scale(f.value);
        m.axpy(f.grad[k], &g.value);
        grad.push(m);
    }
    let mut hess = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = Vec::with_capacity(n);
        for l in 0..n {
            let mut m = g.hess[k][l].scale(f.value);
            m.axpy(f.grad[k], &g.grad[l]);
            m.axpy(f.grad[l], &g.grad[k]);
            m.axpy(f.hess[k][l], &g.value);
            row.push(m);
        }
        hess.push(row);
    }
    MatJet { value, grad, hess }
}

/// Jet of the linear field `sigma_j(y)`: `d_k sigma_j = E_kj`, no curvature.
pub fn sigma_jet(j: usize, y: &[f64]) -> MatJet {
    let n = y.len();
    MatJet {
        value: sigma(j, y),
        grad: (0..n).map(|k| SoMatrix::unit(n, k, j)).collect(),
        hess: vec![vec![SoMatrix::zeros(n); n]; n],
    }
}

/// Jet of the constant field `E_{alpha j}`.
pub fn unit_jet(n: usize, alpha: usize, j: usize) -> MatJet {
    MatJet {
        value: SoMatrix::unit(n, alpha, j),
        grad: vec![SoMatrix::zeros(n); n],
        hess: vec![vec![SoMatrix::zeros(n); n]; n],
    }
}

/// Jet of the quadratic field `y_alpha sigma_j(y) - y_j sigma_alpha(y)`.
pub fn cross_jet(alpha: usize, j: usize, y: &[f64]) -> MatJet {
    let n = y.len();
    let s_j = sigma(j, y);
    let s_a = sigma(alpha, y);
    let mut value = s_j.scale(y[alpha]);
    value.axpy(-y[j], &s_a);
    let mut grad = Vec::with_capacity(n);
    for k in 0..n {
        let mut m = SoMatrix::unit(n, k, j).scale(y[alpha]);
        m.axpy(-y[j], &SoMatrix::unit(n, k, alpha));
        if k == alpha {
            m += &s_j;
        }
        if k == j {
            m -= &s_a;
        }
        grad.push(m);
    }
    let mut hess = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = Vec::with_capacity(n);
        for l in 0..n {
            let mut m = SoMatrix::zeros(n);
            if k == alpha {
                m += &SoMatrix::unit(n, l, j);
            }
            if l == alpha {
                m += &SoMatrix::unit(n, k, j);
            }
            if k == j {
                m -= &SoMatrix::unit(n, l, alpha);
            }
            if l == j {
                m -= &SoMatrix::unit(n, k, alpha);
            }
            row.push(m);
        }
        hess.push(row);
    }
    MatJet { value, grad, hess }
}

/// Jet at `y` of the equivariant field `u_j = sigma_j(y) phi(|y|^2)`, given
/// `phi`, `phi'`, `phi''` with respect to `s = |y|^2`.
pub fn equivariant_jet(y: &[f64], phi: f64, dphi: f64, ddphi: f64) -> OneFormJet {
    let f = ScalarJet::of_square_radius(y, phi, dphi, ddphi);
    OneFormJet::from_components((0..y.len()).map(|j| scalar_times(&f, &sigma_jet(j, y))).collect())
}

/// Converts radial data `(v, v', v'')` at `r > 0` into derivatives of
/// `phi(s) = v(sqrt(s))`.
pub fn radial_to_square(r: f64, v: f64, dv: f64, ddv: f64) -> (f64, f64, f64) {
    let dphi = dv / (2.0 * r);
    let ddphi = (ddv - dv / r) / (4.0 * r * r);
    (v, dphi, ddphi)
}
