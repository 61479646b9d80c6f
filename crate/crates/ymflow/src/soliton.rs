//! The closed-form homothetically shrinking soliton `W_i = sigma_i / (a|y|^2 + b)`,
//! its curvature, the self-similar profile, and the explicit eigenfunctions of `-L`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::liealg::{OneForm, SoMatrix, TwoForm};
use crate::operators::{
    codifferential, cross_jet, curvature_jet, equivariant_jet, scalar_times, unit_jet, Field,
    MatJet, OneFormJet, ScalarJet,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolitonParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
}

/// `a = sqrt(n-2) / (2 sqrt 2)`, `b = (6n - 12 - (n+2) sqrt(2n-4)) / 2`.
pub fn constants(n: usize) -> Result<SolitonParams> {
    crate::check_dim(n)?;
    let nf = n as f64;
    let a = (nf - 2.0).sqrt() / (2.0 * 2f64.sqrt());
    let b = 0.5 * (6.0 * nf - 12.0 - (nf + 2.0) * (2.0 * nf - 4.0).sqrt());
    if b <= 0.0 {
        return Err(Error::Domain(format!("b = {b} is not positive for n = {n}")));
    }
    Ok(SolitonParams { n, a, b })
}

/// Soliton with a fixed set of constants; the constants may be perturbed for
/// negative controls.
#[derive(Clone, Debug)]
pub struct Soliton {
    pub params: SolitonParams,
}

fn sq(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

impl Soliton {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self { params: constants(n)? })
    }

    pub fn with_params(params: SolitonParams) -> Self {
        Self { params }
    }

    pub fn dim(&self) -> usize {
        self.params.n
    }

    /// Radial profile `1 / (a r^2 + b)`.
    pub fn profile(&self, r: f64) -> f64 {
        1.0 / (self.params.a * r * r + self.params.b)
    }

    /// `phi(s) = 1/(a s + b)` and its first three derivatives in `s`.
    fn phi(&self, s: f64) -> [f64; 4] {
        let SolitonParams { a, b, .. } = self.params;
        let d = 1.0 / (a * s + b);
        [d, -a * d * d, 2.0 * a * a * d * d * d, -6.0 * a * a * a * d.powi(4)]
    }

    /// Curvature coefficients: `F_ij = P E_ij + Q (y_i sigma_j - y_j sigma_i)`,
    /// returned as `[P, P', P'']` and `[Q, Q', Q'']` in `s`.
    fn curvature_coeffs(&self, s: f64) -> ([f64; 3], [f64; 3]) {
        let [f, f1, f2, f3] = self.phi(s);
        let p = 2.0 * f - s * f * f;
        let p1 = 2.0 * f1 - f * f - 2.0 * s * f * f1;
        let p2 = 2.0 * f2 - 4.0 * f * f1 - 2.0 * s * f1 * f1 - 2.0 * s * f * f2;
        let q = 2.0 * f1 + f * f;
        let q1 = 2.0 * f2 + 2.0 * f * f1;
        let q2 = 2.0 * f3 + 2.0 * f1 * f1 + 2.0 * f * f2;
        ([p, p1, p2], [q, q1, q2])
    }

    pub fn w(&self, y: &[f64]) -> OneForm {
        let f = self.profile(sq(y).sqrt());
        OneForm { comps: (0..y.len()).map(|j| crate::liealg::sigma(j, y).scale(f)).collect() }
    }

    /// Exact second-order jet of `W` at `y`.
    pub fn w_jet(&self, y: &[f64]) -> OneFormJet {
        let [f, f1, f2, _] = self.phi(sq(y));
        equivariant_jet(y, f, f1, f2)
    }

    /// Closed-form curvature `F_W(y)`.
    pub fn curvature(&self, y: &[f64]) -> TwoForm {
        let n = y.len();
        let ([p, ..], [q, ..]) = self.curvature_coeffs(sq(y));
        TwoForm::from_upper(n, |i, j| {
            let mut m = SoMatrix::unit(n, i, j).scale(p);
            m.axpy(q, &cross_jet(i, j, y).value);
            m
        })
    }

    /// `(1-t)^{-1/2} W(x / sqrt(1-t))`.
    pub fn spacetime(&self, x: &[f64], t: f64) -> Result<OneForm> {
        if t >= 1.0 {
            return Err(Error::Domain(format!("t = {t} is not before the blowup time 1")));
        }
        let l = (1.0 - t).sqrt();
        let y: Vec<f64> = x.iter().map(|v| v / l).collect();
        Ok(self.w(&y).scale(1.0 / l))
    }

    /// `D_W* F_W + (1/2) y . F_W`, evaluated through the operator layer.
    pub fn residual(&self, y: &[f64]) -> OneForm {
        let w = self.w_jet(y);
        let fj = curvature_jet(&w);
        let mut r = codifferential(&w, &fj);
        r.axpy(0.5, &fj.f.interior(y));
        r
    }

    /// `g_j = y^i d_i W_j + W_j = sigma_j * 2b / (a|y|^2 + b)^2` with its exact jet.
    pub fn g_jet(&self, y: &[f64]) -> OneFormJet {
        let SolitonParams { a, b, .. } = self.params;
        let d = 1.0 / (a * sq(y) + b);
        let c = 2.0 * b;
        equivariant_jet(y, c * d * d, -2.0 * a * c * d.powi(3), 6.0 * a * a * c * d.powi(4))
    }

    /// `g` evaluated from its definition `y^i d_i W_j + W_j`.
    pub fn g_from_definition(&self, y: &[f64]) -> OneForm {
        let w = self.w_jet(y);
        OneForm {
            comps: (0..y.len())
                .map(|j| {
                    let mut m = w.comp(j).radial_derivative(y);
                    m += w.value(j);
                    m
                })
                .collect(),
        }
    }

    /// The proportional form `sigma_j / (a|y|^2 + b)^2`.
    pub fn g_proportional(&self, y: &[f64]) -> OneForm {
        let d = 1.0 / (self.params.a * sq(y) + self.params.b);
        OneForm { comps: (0..y.len()).map(|j| crate::liealg::sigma(j, y).scale(d * d)).collect() }
    }

    /// Radial profile of `g`, `2b / (a r^2 + b)^2`.
    pub fn g_profile(&self, r: f64) -> f64 {
        let d = self.profile(r);
        2.0 * self.params.b * d * d
    }

    /// Row `alpha` of the curvature, `(F_alpha)_j = F_W[alpha][j]`, with exact jet.
    pub fn f_alpha_jet(&self, alpha: usize, y: &[f64]) -> OneFormJet {
        let n = y.len();
        let s = sq(y);
        let ([p, p1, p2], [q, q1, q2]) = self.curvature_coeffs(s);
        let pj = ScalarJet::of_square_radius(y, p, p1, p2);
        let qj = ScalarJet::of_square_radius(y, q, q1, q2);
        let comps = (0..n)
            .map(|j| {
                if j == alpha {
                    return MatJet::zeros(n);
                }
                let mut m = scalar_times(&pj, &unit_jet(n, alpha, j));
                m.axpy(1.0, &scalar_times(&qj, &cross_jet(alpha, j, y)));
                m
            })
            .collect();
        OneFormJet::from_components(comps)
    }

    /// `|F_W[2][3](-R e_1)|_F = sqrt(2) ((2a-1) R^2 + 2b) / (a R^2 + b)^2` (one-based indices).
    pub fn curvature_f23_at(&self, r: f64) -> f64 {
        let SolitonParams { a, b, .. } = self.params;
        let d = a * r * r + b;
        2f64.sqrt() * ((2.0 * a - 1.0) * r * r + 2.0 * b) / (d * d)
    }

    /// Frobenius norm of the curvature of the equivariant field `sigma_j w(r)`
    /// from `w` and `w'`, summed over ordered pairs.
    pub fn equivariant_curvature_norm(n: usize, r: f64, w: f64, dw: f64) -> f64 {
        let nf = n as f64;
        let t1 = 2.0 * w + r * dw;
        let t2 = 2.0 * w - r * r * w * w;
        (4.0 * (nf - 1.0) * t1 * t1 + 2.0 * (nf - 1.0) * (nf - 2.0) * t2 * t2).sqrt()
    }
}

/// `W` as a [`Field`].
pub struct SolitonField(pub Soliton);

impl Field for SolitonField {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn jet(&self, y: &[f64]) -> OneFormJet {
        self.0.w_jet(y)
    }
    fn label(&self) -> String {
        format!("W(n={})", self.0.dim())
    }
}

/// The time-translation eigenfunction `g` as a [`Field`].
pub struct GField(pub Soliton);

impl Field for GField {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn jet(&self, y: &[f64]) -> OneFormJet {
        self.0.g_jet(y)
    }
    fn label(&self) -> String {
        format!("g(n={})", self.0.dim())
    }
}

/// The curvature row `F_alpha` as a [`Field`].
pub struct FAlphaField(pub Soliton, pub usize);

impl Field for FAlphaField {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn jet(&self, y: &[f64]) -> OneFormJet {
        self.0.f_alpha_jet(self.1, y)
    }
    fn label(&self) -> String {
        format!("F_{}(n={})", self.1 + 1, self.0.dim())
    }
}
