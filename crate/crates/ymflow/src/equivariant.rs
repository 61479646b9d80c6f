//! Radial reduction under the ansatz `u_j(y) = sigma_j(y) v(|y|)`.
//!
//! Profiles live on a spectral element grid over `[0, R_max]`: Gauss-Lobatto-Legendre
//! elements, with a Gauss-Lobatto-Jacobi first element that integrates the
//! `r^{n+1}` factor of the weight exactly. The reduced operator is assembled in
//! weak form from coefficients extracted from the tensor operators, with the
//! Robin condition `v'(R) = -2 v(R) / R` that matches the `r^{-2}` tail of `W`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liealg::{sigma, OneForm};
use crate::operators::{
    equivariant_jet, linearized_l_with, nonlinear_n_with, radial_to_square, ConnectionContext,
    Field, OneFormJet,
};
use crate::quadrature::{barycentric_weights, diff_matrix, gauss_lobatto_jacobi, lagrange_basis};
use crate::soliton::Soliton;

/// Element layout of a radial grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub elements: usize,
    pub degree: usize,
    pub r_max: f64,
    /// Ratio of consecutive element widths (1 for uniform elements).
    pub stretch: f64,
}

impl GridSpec {
    pub fn node_count(&self) -> usize {
        self.elements * self.degree + 1
    }

    /// Same radius and degree with twice the elements.
    pub fn refined(&self) -> Self {
        Self { elements: 2 * self.elements, stretch: self.stretch.sqrt(), ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 4 || self.degree > 24 {
            return Err(Error::Domain(format!("element degree {} outside 4..=24", self.degree)));
        }
        if self.elements < 2 {
            return Err(Error::Domain("at least two elements are required".into()));
        }
        if !(4.0..=30.0).contains(&self.r_max) {
            return Err(Error::Domain(format!("R_max = {} outside [4, 30]", self.r_max)));
        }
        if !(self.stretch >= 1.0 && self.stretch <= 1.5) {
            return Err(Error::Domain(format!("stretch {} outside [1, 1.5]", self.stretch)));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { elements: 32, degree: 12, r_max: 16.0, stretch: 1.0 }
    }
}

#[derive(Clone, Debug)]
struct Element {
    first: usize,
    r0: f64,
    h: f64,
    /// Reference nodes on `[-1, 1]`.
    xi: Vec<f64>,
    bary: Vec<f64>,
    /// Element contribution to the lumped mass at each local node.
    wt: Vec<f64>,
    /// Physical differentiation matrix.
    d: DMatrix<f64>,
}

/// Spectral element grid on `[0, R_max]` with the Gaussian-weighted lumped mass.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub n: usize,
    pub spec: GridSpec,
    pub r: Vec<f64>,
    /// Quadrature weights of `r^{n+1} e^{-r^2/4} dr` at the nodes.
    pub mass: Vec<f64>,
    edges: Vec<f64>,
    elements: Vec<Element>,
}

impl RadialGrid {
    pub fn new(n: usize, spec: GridSpec) -> Result<Arc<Self>> {
        crate::check_dim(n)?;
        spec.validate()?;
        let p = spec.degree;
        let ne = spec.elements;
        let widths: Vec<f64> = (0..ne).map(|e| spec.stretch.powi(e as i32)).collect();
        let total: f64 = widths.iter().sum();
        let mut edges = vec![0.0];
        for w in &widths {
            edges.push(edges.last().unwrap() + w * spec.r_max / total);
        }
        edges[ne] = spec.r_max;
        let (xg, wg) = gauss_lobatto_jacobi(p, 0);
        let (xj, wj) = gauss_lobatto_jacobi(p, n as u32 + 1);
        let k = spec.node_count();
        let mut r = vec![0.0; k];
        let mut mass = vec![0.0; k];
        let mut elements = Vec::with_capacity(ne);
        for e in 0..ne {
            let (r0, h) = (edges[e], edges[e + 1] - edges[e]);
            let (xi, wq) = if e == 0 { (&xj, &wj) } else { (&xg, &wg) };
            let first = e * p;
            let mut wt = Vec::with_capacity(p + 1);
            for (i, (&x, &w)) in xi.iter().zip(wq).enumerate() {
                let ri = if i == p { edges[e + 1] } else { r0 + (x + 1.0) * h / 2.0 };
                r[first + i] = ri;
                let gauss = (-ri * ri / 4.0).exp();
                let m = if e == 0 {
                    (h / 2.0).powi(n as i32 + 2) * w * gauss
                } else {
                    ri.powi(n as i32 + 1) * gauss * w * h / 2.0
                };
                mass[first + i] += m;
                wt.push(m);
            }
            let d = diff_matrix(xi) * (2.0 / h);
            elements.push(Element { first, r0, h, xi: xi.clone(), bary: barycentric_weights(xi), wt, d });
        }
        Ok(Arc::new(Self { n, spec, r, mass, edges, elements }))
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }

    /// `2(n-1)`: radial reduction factor of the Frobenius pairing.
    pub fn sector_factor(&self) -> f64 {
        2.0 * (self.n as f64 - 1.0)
    }

    /// `w(r) = r^{n+1} e^{-r^2/4}`.
    pub fn weight(&self, r: f64) -> f64 {
        r.powi(self.n as i32 + 1) * (-r * r / 4.0).exp()
    }

    fn element_of(&self, r: f64) -> usize {
        let ne = self.elements.len();
        match self.edges.binary_search_by(|e| e.total_cmp(&r)) {
            Ok(i) => i.min(ne - 1),
            Err(i) => (i.max(1) - 1).min(ne - 1),
        }
    }

    /// Element-wise derivative of nodal data; shared nodes take the value from
    /// the element on their right, except the last node.
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for el in self.elements.iter().rev() {
            let p = el.xi.len();
            let loc = DVector::from_column_slice(&v[el.first..el.first + p]);
            let dv = &el.d * loc;
            for i in 0..p {
                if el.first + i == v.len() - 1 || i < p - 1 {
                    out[el.first + i] = dv[i];
                }
            }
        }
        out
    }

    /// Value and first two derivatives of nodal data at `r` by element-local interpolation.
    pub fn interpolate(&self, v: &[f64], r: f64) -> Result<(f64, f64, f64)> {
        if !(0.0..=self.spec.r_max * (1.0 + 1e-12)).contains(&r) {
            return Err(Error::Domain(format!("radius {r} outside [0, {}]", self.spec.r_max)));
        }
        let el = &self.elements[self.element_of(r)];
        let p = el.xi.len();
        let loc = DVector::from_column_slice(&v[el.first..el.first + p]);
        let d1 = &el.d * &loc;
        let d2 = &el.d * &d1;
        let x = 2.0 * (r - el.r0) / el.h - 1.0;
        let l = lagrange_basis(&el.xi, &el.bary, x.clamp(-1.0, 1.0));
        let dot = |f: &DVector<f64>| l.iter().zip(f.iter()).map(|(a, b)| a * b).sum::<f64>();
        Ok((dot(&loc), dot(&d1), dot(&d2)))
    }

    /// `2(n-1) sum_k m_k v1_k v2_k`, the reduced Gaussian-weighted inner product.
    pub fn inner(&self, v1: &[f64], v2: &[f64]) -> f64 {
        self.sector_factor() * self.mass.iter().zip(v1).zip(v2).map(|((m, a), b)| m * a * b).sum::<f64>()
    }
}

/// Samples of a radial profile `v` on a shared grid.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!("{} values on a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.r.iter().map(|&r| f(r)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        self.grid.interpolate(&self.values, r)
    }

    pub fn norm(&self) -> f64 {
        weighted_inner(self, self).sqrt()
    }

    /// Extrapolated `v'(0)`.
    pub fn origin_slope(&self) -> f64 {
        self.grid.derivative(&self.values)[0]
    }
}

/// Reduced Gaussian-weighted inner product
/// `2(n-1) int_0^R v1 v2 r^{n+1} e^{-r^2/4} dr`.
pub fn weighted_inner(v1: &RadialProfile, v2: &RadialProfile) -> f64 {
    v1.grid.inner(&v1.values, &v2.values)
}

/// The equivariant field `u_j(y) = sigma_j(y) v(|y|)` built from a profile.
pub struct EquivariantField {
    pub profile: RadialProfile,
}

/// `u_j = sigma_j v(|y|)`.
pub fn embed(v: &RadialProfile) -> EquivariantField {
    EquivariantField { profile: v.clone() }
}

impl EquivariantField {
    pub fn try_jet(&self, y: &[f64]) -> Result<OneFormJet> {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (v, dv, ddv) = self.profile.eval(r)?;
        Ok(jet_from_radial(y, r, v, dv, ddv))
    }
}

impl Field for EquivariantField {
    fn dim(&self) -> usize {
        self.profile.grid.n
    }

    /// Panics outside the grid; use [`EquivariantField::try_jet`] for a checked call.
    fn jet(&self, y: &[f64]) -> OneFormJet {
        self.try_jet(y).expect("point inside the radial grid")
    }

    fn label(&self) -> String {
        "sigma.v".into()
    }
}

/// Jet of `sigma_j v(|y|)` from radial data at `r = |y|`.
pub fn jet_from_radial(y: &[f64], r: f64, v: f64, dv: f64, ddv: f64) -> OneFormJet {
    if r < 1e-7 {
        return equivariant_jet(y, v, ddv / 2.0, 0.0);
    }
    let (p, dp, ddp) = radial_to_square(r, v, dv, ddv);
    equivariant_jet(y, p, dp, ddp)
}

/// Least-squares radial part `X` of a 1-form `T_j = sigma_j X` at `y`, and the
/// relative off-ansatz residual `|T - sigma X| / |sigma|`.
pub fn radial_extract(t: &OneForm, y: &[f64]) -> (f64, f64) {
    let n = y.len();
    let sig: Vec<_> = (0..n).map(|j| sigma(j, y)).collect();
    let ss: f64 = sig.iter().map(|s| s.norm_sq()).sum();
    let ts: f64 = t.comps.iter().zip(&sig).map(|(a, b)| a.dot(b)).sum();
    let x = ts / ss;
    let mut res = 0.0;
    for (a, s) in t.comps.iter().zip(&sig) {
        res += (a - &s.scale(x)).norm_sq();
    }
    (x, res.sqrt() / ss.sqrt())
}

/// Hand-derived radial potential `c0(r) = -1 + (n-2)(6f - 3 r^2 f^2)`, `f = 1/(a r^2 + b)`.
pub fn hand_potential(sol: &Soliton, r: f64) -> f64 {
    let f = sol.profile(r);
    -1.0 + (sol.dim() as f64 - 2.0) * (6.0 * f - 3.0 * r * r * f * f)
}

/// Hand-derived reduced nonlinearity `(n-2) v^2 (3 - 3 r^2 f - r^2 v)`.
pub fn hand_nonlinearity(sol: &Soliton, r: f64, v: f64) -> f64 {
    let f = sol.profile(r);
    (sol.dim() as f64 - 2.0) * v * v * (3.0 - 3.0 * r * r * f - r * r * v)
}

/// Radial coefficients of the reduced operator at one radius.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadialCoefficients {
    pub r: f64,
    /// `L_red v = c2 v'' + c1 v' + c0 v`.
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    /// `N_red(v) = alpha2 v^2 + alpha3 v^3`.
    pub alpha2: f64,
    pub alpha3: f64,
    /// Largest relative off-ansatz residual over all probes.
    pub off_ansatz: f64,
    /// Largest derivative dependence of the reduced nonlinearity.
    pub n_derivative_leak: f64,
}

/// Extracts the reduced coefficients at radius `r > 0` from the tensor operators.
pub fn probe_coefficients(ctx: &ConnectionContext, r: f64) -> RadialCoefficients {
    let n = ctx.dim();
    let mut y = vec![0.0; n];
    y[0] = r;
    let bg = ctx.at(&y);
    let mut off: f64 = 0.0;
    let mut lin = |v: f64, dv: f64, ddv: f64| {
        let u = jet_from_radial(&y, r, v, dv, ddv);
        let (x, res) = radial_extract(&linearized_l_with(&bg, &u, &y), &y);
        off = off.max(res / (1.0 + x.abs()));
        x
    };
    let c0 = lin(1.0, 0.0, 0.0);
    let c1 = lin(0.0, 1.0, 0.0);
    let c2 = lin(0.0, 0.0, 1.0);
    let mut nl = |v: f64, dv: f64, ddv: f64| {
        let u = jet_from_radial(&y, r, v, dv, ddv);
        let (x, res) = radial_extract(&nonlinear_n_with(&bg, &u), &y);
        off = off.max(res / (1.0 + x.abs()));
        x
    };
    let np1 = nl(1.0, 0.0, 0.0);
    let nm1 = nl(-1.0, 0.0, 0.0);
    let np2 = nl(2.0, 0.0, 0.0);
    let nd = nl(1.0, 0.7, -0.3);
    // N(v) = a1 v + a2 v^2 + a3 v^3 through v = 1, -1, 2
    let a2 = (np1 + nm1) / 2.0;
    let odd = (np1 - nm1) / 2.0; // a1 + a3
    let a3 = (np2 - 4.0 * a2 - 2.0 * odd) / 6.0;
    let a1 = odd - a3;
    let scale = 1.0 + a2.abs() + a3.abs();
    RadialCoefficients {
        r,
        c2,
        c1,
        c0,
        alpha2: a2,
        alpha3: a3,
        off_ansatz: off,
        n_derivative_leak: ((nd - np1).abs() + a1.abs()) / scale,
    }
}

/// Coefficients at the origin by Richardson extrapolation in `r^2`.
fn origin_coefficients(ctx: &ConnectionContext) -> RadialCoefficients {
    let h = 0.02;
    let c: Vec<_> = [h, 2.0 * h, 4.0 * h].iter().map(|&r| probe_coefficients(ctx, r)).collect();
    // quantities are even in r: q(r) = q0 + q1 r^2 + q2 r^4 + O(r^6)
    let rich = |f: &dyn Fn(&RadialCoefficients) -> f64| {
        let (q1, q2, q4) = (f(&c[0]), f(&c[1]), f(&c[2]));
        let s1 = (4.0 * q1 - q2) / 3.0;
        let s2 = (4.0 * q2 - q4) / 3.0;
        (16.0 * s1 - s2) / 15.0
    };
    RadialCoefficients {
        r: 0.0,
        c2: rich(&|q| q.c2),
        c1: f64::NAN,
        c0: rich(&|q| q.c0),
        alpha2: rich(&|q| q.alpha2),
        alpha3: rich(&|q| q.alpha3),
        off_ansatz: c.iter().map(|q| q.off_ansatz).fold(0.0, f64::max),
        n_derivative_leak: c.iter().map(|q| q.n_derivative_leak).fold(0.0, f64::max),
    }
}

/// Equivariant restriction of `L` on a radial grid, in weak form.
#[derive(Clone, Debug)]
pub struct ReducedOperator {
    pub grid: Arc<RadialGrid>,
    /// Symmetric stiffness `A`, with `-L_red ~ B^{-1} A`.
    pub stiffness: DMatrix<f64>,
    /// `M = -B^{-1} A`, the nodal action of `L_red`.
    pub matrix: DMatrix<f64>,
    pub coefficients: Vec<RadialCoefficients>,
    pub soliton: Soliton,
}

/// Tolerance on the structural checks of the extracted coefficients.
const STRUCTURE_TOL: f64 = 1e-7;

/// Assembles the reduced operator, checking that the tensor operator maps the
/// ansatz to itself and has Sturm-Liouville form for the weight `r^{n+1} e^{-r^2/4}`.
pub fn reduce_l(grid: &Arc<RadialGrid>) -> Result<ReducedOperator> {
    let ctx = ConnectionContext::new(grid.n)?;
    let coeffs: Vec<RadialCoefficients> = grid
        .r
        .par_iter()
        .map(|&r| if r == 0.0 { origin_coefficients(&ctx) } else { probe_coefficients(&ctx, r) })
        .collect();
    let nf = grid.n as f64;
    for c in &coeffs {
        if c.off_ansatz > STRUCTURE_TOL || c.n_derivative_leak > STRUCTURE_TOL {
            return Err(Error::Discretization(format!(
                "off-ansatz residual {:.3e} / derivative leak {:.3e} at r = {}",
                c.off_ansatz, c.n_derivative_leak, c.r
            )));
        }
        let c1_expected = if c.r > 0.0 { (nf + 1.0) / c.r - c.r / 2.0 } else { c.c1 };
        let c1_ok = c.r == 0.0 || (c.c1 - c1_expected).abs() <= STRUCTURE_TOL * (1.0 + c1_expected.abs());
        if (c.c2 - 1.0).abs() > STRUCTURE_TOL || !c1_ok {
            return Err(Error::Discretization(format!(
                "reduced operator is not of Sturm-Liouville form at r = {} (c2 = {}, c1 = {})",
                c.r, c.c2, c.c1
            )));
        }
    }
    let c0: Vec<f64> = coeffs.iter().map(|c| c.c0).collect();
    let stiffness = assemble(grid, &c0);
    let matrix = DMatrix::from_fn(grid.len(), grid.len(), |i, j| -stiffness[(i, j)] / grid.mass[i]);
    Ok(ReducedOperator { grid: grid.clone(), stiffness, matrix, coefficients: coeffs, soliton: ctx.soliton })
}

/// Weak-form stiffness for `-(w v')'/w - c0 v` with lumped Gaussian mass and Robin closure.
fn assemble(grid: &RadialGrid, c0: &[f64]) -> DMatrix<f64> {
    let k = grid.len();
    let mut a = DMatrix::<f64>::zeros(k, k);
    for el in &grid.elements {
        let p = el.xi.len();
        let wt = &el.wt;
        for i in 0..p {
            for j in 0..p {
                let mut s = 0.0;
                for q in 0..p {
                    s += el.d[(q, i)] * wt[q] * el.d[(q, j)];
                }
                a[(el.first + i, el.first + j)] += s;
            }
            a[(el.first + i, el.first + i)] -= c0[el.first + i] * wt[i];
        }
    }
    let rm = grid.spec.r_max;
    a[(k - 1, k - 1)] += grid.weight(rm) * 2.0 / rm;
    a
}

impl ReducedOperator {
    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// `L_red v` at the nodes.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(v)).iter().copied().collect()
    }

    /// Reduced nonlinearity at the nodes.
    pub fn nonlinear(&self, v: &[f64]) -> Vec<f64> {
        self.coefficients.iter().zip(v).map(|(c, &x)| x * x * (c.alpha2 + c.alpha3 * x)).collect()
    }

    /// Derivative of the reduced nonlinearity.
    pub fn nonlinear_derivative(&self, v: &[f64]) -> Vec<f64> {
        self.coefficients.iter().zip(v).map(|(c, &x)| x * (2.0 * c.alpha2 + 3.0 * c.alpha3 * x)).collect()
    }

    /// Symmetric form `B^{-1/2} A B^{-1/2}`.
    pub fn symmetric_form(&self) -> DMatrix<f64> {
        let s: Vec<f64> = self.grid.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        DMatrix::from_fn(self.grid.len(), self.grid.len(), |i, j| self.stiffness[(i, j)] * s[i] * s[j])
    }

    /// Relative asymmetry of the symmetric form.
    pub fn symmetry_residual(&self) -> f64 {
        let s = self.symmetric_form();
        (&s - s.transpose()).amax() / s.amax()
    }
}

/// Eigenpairs of `-L_red`, ascending, weighted-orthonormal.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub grid: Arc<RadialGrid>,
    pub lambda: Vec<f64>,
    /// Column `j` holds the nodal values of `xi_j`.
    pub xi: DMatrix<f64>,
    /// Number of nonpositive eigenvalues.
    pub split_index: usize,
}

/// Symmetric dense eigen-solve of the reduced operator; keeps the lowest `modes` pairs.
pub fn spectrum(op: &ReducedOperator, modes: usize) -> Result<SpectralBasis> {
    let k = op.grid.len();
    if modes == 0 || modes > k {
        return Err(Error::Domain(format!("mode count {modes} outside 1..={k}")));
    }
    let asym = op.symmetry_residual();
    if asym > 1e-6 {
        return Err(Error::Discretization(format!("symmetrization residual {asym:.3e}")));
    }
    let s = op.symmetric_form();
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = 1.0 / op.grid.sector_factor().sqrt();
    let mut xi = DMatrix::<f64>::zeros(k, modes);
    let mut lambda = Vec::with_capacity(modes);
    for (c, &idx) in order.iter().take(modes).enumerate() {
        lambda.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        // fix the sign so that the value near the origin is positive
        let sign = if col[0] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..k {
            xi[(i, c)] = sign * col[i] * scale / op.grid.mass[i].sqrt();
        }
    }
    let split_index = eig.eigenvalues.iter().filter(|&&l| l <= 0.0).count();
    Ok(SpectralBasis { grid: op.grid.clone(), lambda, xi, split_index })
}

/// Relation used to select eigenvalues in [`project`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Relation {
    pub fn holds(self, lambda: f64, mu: f64) -> bool {
        match self {
            Relation::Eq => lambda == mu,
            Relation::Ne => lambda != mu,
            Relation::Lt => lambda < mu,
            Relation::Gt => lambda > mu,
            Relation::Le => lambda <= mu,
            Relation::Ge => lambda >= mu,
        }
    }
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// First positive eigenvalue, `lambda_{I+1}`.
    pub fn first_positive(&self) -> Option<f64> {
        self.lambda.get(self.split_index).copied()
    }

    pub fn mode(&self, j: usize) -> RadialProfile {
        RadialProfile { grid: self.grid.clone(), values: self.xi.column(j).iter().copied().collect() }
    }

    /// `<v, xi_j>` for every retained mode.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        let f = self.grid.sector_factor();
        let wv = DVector::from_iterator(v.len(), v.iter().zip(&self.grid.mass).map(|(a, m)| a * m * f));
        (self.xi.transpose() * wv).iter().copied().collect()
    }

    /// `sum_j c_j xi_j`.
    pub fn reconstruct(&self, c: &[f64]) -> Vec<f64> {
        (&self.xi * DVector::from_column_slice(c)).iter().copied().collect()
    }

    /// Weighted Gram matrix of the retained modes.
    pub fn gram(&self) -> DMatrix<f64> {
        let f = self.grid.sector_factor();
        let bx = DMatrix::from_fn(self.xi.nrows(), self.xi.ncols(), |i, j| self.xi[(i, j)] * self.grid.mass[i] * f);
        self.xi.transpose() * bx
    }
}

/// Spectral projector `sum_{j: lambda_j ~ mu} <v, xi_j> xi_j`.
pub fn project(basis: &SpectralBasis, relation: Relation, mu: f64, v: &RadialProfile) -> RadialProfile {
    let mut c = basis.coefficients(&v.values);
    for (cj, &l) in c.iter_mut().zip(&basis.lambda) {
        if !relation.holds(l, mu) {
            *cj = 0.0;
        }
    }
    RadialProfile { grid: basis.grid.clone(), values: basis.reconstruct(&c) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(n: usize) -> Arc<RadialGrid> {
        RadialGrid::new(n, GridSpec { elements: 12, degree: 10, r_max: 12.0, stretch: 1.0 }).unwrap()
    }

    #[test]
    fn mass_integrates_the_weight() {
        // int_0^inf r^6 e^{-r^2/4} dr = 15 sqrt(pi) * 2^7 / 16 ... evaluated via Gamma(7/2) 2^6
        let g = small_grid(5);
        let total: f64 = g.mass.iter().sum();
        let exact = 2f64.powi(6) * (15.0 / 8.0) * std::f64::consts::PI.sqrt();
        assert!(((total - exact) / exact).abs() < 1e-10, "{total} vs {exact}");
    }

    #[test]
    fn interpolation_of_smooth_profile() {
        let g = small_grid(6);
        let v = RadialProfile::from_fn(&g, |r| (-r * r / 3.0).exp());
        for r in [0.0, 0.37, 2.9, 7.5, 11.99] {
            let (f, df, ddf) = v.eval(r).unwrap();
            let e = (-r * r / 3.0).exp();
            assert!((f - e).abs() < 1e-9);
            assert!((df + 2.0 * r / 3.0 * e).abs() < 1e-7);
            assert!((ddf - (4.0 * r * r / 9.0 - 2.0 / 3.0) * e).abs() < 1e-5);
        }
        assert!(v.eval(12.5).is_err());
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec { elements: 1, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec { r_max: 50.0, ..GridSpec::default() }.validate().is_err());
        assert_eq!(GridSpec::default().node_count(), 385);
    }
}
