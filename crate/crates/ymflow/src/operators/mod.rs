//! Pointwise evaluation of the differential operators of the flow on jets.
//!
//! Conventions: all index sums are written out, the metric is flat, and the
//! codifferential of a 2-form is `(D*F)_j = -sum_i (d_i F_ij + [A_i, F_ij])`,
//! so that Yang-Mills flow reads `d_t A = -D*F`.

mod jet;

pub use jet::{
    cross_jet, equivariant_jet, radial_to_square, scalar_times, sigma_jet, unit_jet, MatJet,
    OneFormJet, ScalarJet,
};

use crate::error::{Error, Result};
use crate::liealg::{bracket, OneForm, SoMatrix, TwoForm};
use crate::soliton::Soliton;

/// A field that can be evaluated to second order at any point.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn jet(&self, y: &[f64]) -> OneFormJet;
    fn value(&self, y: &[f64]) -> OneForm {
        self.jet(y).value_form()
    }
    fn label(&self) -> String;
}

/// A 2-form together with its first derivatives `dF[k] = d_k F`.
#[derive(Clone, Debug)]
pub struct TwoFormJet {
    pub f: TwoForm,
    pub df: Vec<TwoForm>,
}

/// `F_ij = d_i A_j - d_j A_i + [A_i, A_j]`.
pub fn curvature(a: &OneFormJet) -> TwoForm {
    let n = a.dim();
    TwoForm::from_upper(n, |i, j| {
        let mut m = a.d(i, j) - a.d(j, i);
        m.add_commutator(1.0, a.value(i), a.value(j));
        m
    })
}

/// Curvature and its first derivatives,
/// `d_k F_ij = d_k d_i A_j - d_k d_j A_i + [d_k A_i, A_j] + [A_i, d_k A_j]`.
pub fn curvature_jet(a: &OneFormJet) -> TwoFormJet {
    let n = a.dim();
    let f = curvature(a);
    let df = (0..n)
        .map(|k| {
            TwoForm::from_upper(n, |i, j| {
                let mut m = a.dd(k, i, j) - a.dd(k, j, i);
                m.add_commutator(1.0, a.d(k, i), a.value(j));
                m.add_commutator(1.0, a.value(i), a.d(k, j));
                m
            })
        })
        .collect();
    TwoFormJet { f, df }
}

/// `(D_A* F)_j = -sum_i (d_i F_ij + [A_i, F_ij])`.
pub fn codifferential(a: &OneFormJet, f: &TwoFormJet) -> OneForm {
    let n = a.dim();
    let mut out = OneForm::zeros(n);
    for j in 0..n {
        let c = &mut out.comps[j];
        for i in 0..n {
            c.axpy(-1.0, f.df[i].get(i, j));
            c.add_commutator(-1.0, a.value(i), f.f.get(i, j));
        }
    }
    out
}

/// `D_A* phi = -sum_i (d_i phi_i + [A_i, phi_i])` for a 1-form `phi`.
pub fn codifferential_one_form(a: &OneFormJet, phi: &OneFormJet) -> SoMatrix {
    let n = a.dim();
    let mut out = SoMatrix::zeros(n);
    for i in 0..n {
        out.axpy(-1.0, phi.d(i, i));
        out.add_commutator(-1.0, a.value(i), phi.value(i));
    }
    out
}

/// `d_k (D_A* phi)` for every `k`.
fn codifferential_one_form_grad(a: &OneFormJet, phi: &OneFormJet) -> Vec<SoMatrix> {
    let n = a.dim();
    (0..n)
        .map(|k| {
            let mut out = SoMatrix::zeros(n);
            for i in 0..n {
                out.axpy(-1.0, phi.dd(k, i, i));
                out.add_commutator(-1.0, a.d(k, i), phi.value(i));
                out.add_commutator(-1.0, a.value(i), phi.d(k, i));
            }
            out
        })
        .collect()
}

/// The soliton background: `W` as a jet and its curvature in closed form.
#[derive(Clone, Debug)]
pub struct ConnectionContext {
    pub soliton: Soliton,
}

/// Background data at one point.
pub struct Background {
    pub w: OneFormJet,
    pub f: TwoForm,
}

impl ConnectionContext {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self { soliton: Soliton::new(n)? })
    }

    pub fn dim(&self) -> usize {
        self.soliton.params.n
    }

    pub fn at(&self, y: &[f64]) -> Background {
        Background { w: self.soliton.w_jet(y), f: self.soliton.curvature(y) }
    }
}

/// Terms shared by `L` and the conjugated operator:
/// `sum_i 2[W_i, d_i u_j] + [W_i, [W_i, u_j]] + 2[u_i, F_W,ij]`.
fn background_coupling(bg: &Background, u: &OneFormJet, j: usize, out: &mut SoMatrix) {
    let n = u.dim();
    for i in 0..n {
        let wi = bg.w.value(i);
        out.add_commutator(2.0, wi, u.d(i, j));
        let inner = bracket(wi, u.value(j));
        out.add_commutator(1.0, wi, &inner);
        out.add_commutator(2.0, u.value(i), bg.f.get(i, j));
    }
}

fn check_point(u: &OneFormJet, y: &[f64]) -> Result<()> {
    if u.dim() != y.len() {
        return Err(Error::Dimension(format!("jet of dimension {} at a point in R^{}", u.dim(), y.len())));
    }
    Ok(())
}

/// Linearized rescaled operator
/// `L u_j = Delta u_j - (y.grad u)_j / 2 - u_j / 2 + sum_i (2[W_i, d_i u_j] + [W_i,[W_i,u_j]] + 2[u_i, F_W,ij])`.
pub fn linearized_l(ctx: &ConnectionContext, u: &OneFormJet, y: &[f64]) -> Result<OneForm> {
    check_point(u, y)?;
    let bg = ctx.at(y);
    Ok(linearized_l_with(&bg, u, y))
}

pub(crate) fn linearized_l_with(bg: &Background, u: &OneFormJet, y: &[f64]) -> OneForm {
    let n = u.dim();
    let mut out = OneForm::zeros(n);
    for j in 0..n {
        let c = u.comp(j);
        let o = &mut out.comps[j];
        *o = c.laplacian();
        o.axpy(-0.5, &c.radial_derivative(y));
        o.axpy(-0.5, &c.value);
        background_coupling(bg, u, j, o);
    }
    out
}

/// Potential of the conjugated operator, `n/4 - |y|^2/16 - 1/2`.
pub fn schrodinger_potential(n: usize, y: &[f64]) -> f64 {
    let s: f64 = y.iter().map(|v| v * v).sum();
    n as f64 / 4.0 - s / 16.0 - 0.5
}

/// Conjugated operator
/// `A phi_j = -(Delta phi_j + V phi_j + sum_i (2[W_i, d_i phi_j] + [W_i,[W_i,phi_j]] + 2[phi_i, F_W,ij]))`,
/// with `V` from [`schrodinger_potential`]; satisfies `A(e^{-|y|^2/8} u) = -e^{-|y|^2/8} L u`.
pub fn schrodinger_a(ctx: &ConnectionContext, phi: &OneFormJet, y: &[f64]) -> Result<OneForm> {
    check_point(phi, y)?;
    let bg = ctx.at(y);
    let n = phi.dim();
    let v = schrodinger_potential(n, y);
    let mut out = OneForm::zeros(n);
    for j in 0..n {
        let c = phi.comp(j);
        let o = &mut out.comps[j];
        *o = c.laplacian();
        o.axpy(v, &c.value);
        background_coupling(&bg, phi, j, o);
        *o = o.scale(-1.0);
    }
    Ok(out)
}

/// Nonlinearity
/// `N(u)_j = sum_i 2[u_i, d_i u_j + [W_i,u_j]] - [u_i, d_j u_i + [W_j,u_i]] - [u_i,[u_j,u_i]]`.
pub fn nonlinear_n(ctx: &ConnectionContext, u: &OneFormJet, y: &[f64]) -> Result<OneForm> {
    check_point(u, y)?;
    let bg = ctx.at(y);
    Ok(nonlinear_n_with(&bg, u))
}

pub(crate) fn nonlinear_n_with(bg: &Background, u: &OneFormJet) -> OneForm {
    let n = u.dim();
    let mut out = OneForm::zeros(n);
    for j in 0..n {
        let o = &mut out.comps[j];
        for i in 0..n {
            let ui = u.value(i);
            let mut a = u.d(i, j).clone();
            a.add_commutator(1.0, bg.w.value(i), u.value(j));
            o.add_commutator(2.0, ui, &a);
            let mut b = u.d(j, i).clone();
            b.add_commutator(1.0, bg.w.value(j), ui);
            o.add_commutator(-1.0, ui, &b);
            let c = bracket(u.value(j), ui);
            o.add_commutator(-1.0, ui, &c);
        }
    }
    out
}

/// Right-hand side of the rescaled de-Turck flow for `B = W + u`:
/// `Delta B_j - (y.grad B)_j/2 - B_j/2 + d_i[B_i,B_j] + [B_i, d_i B_j - d_j B_i + [B_i,B_j]]
///  + d_j[B_i,u_i] + [B_j, d_i u_i + [B_i,u_i]]`.
pub fn rescaled_rhs(b: &OneFormJet, u: &OneFormJet, y: &[f64]) -> Result<OneForm> {
    check_point(b, y)?;
    check_point(u, y)?;
    let n = b.dim();
    let mut out = OneForm::zeros(n);
    // sum_i (d_i u_i + [B_i, u_i]) is independent of j
    let mut div = SoMatrix::zeros(n);
    for i in 0..n {
        div += u.d(i, i);
        div.add_commutator(1.0, b.value(i), u.value(i));
    }
    for j in 0..n {
        let c = b.comp(j);
        let o = &mut out.comps[j];
        *o = c.laplacian();
        o.axpy(-0.5, &c.radial_derivative(y));
        o.axpy(-0.5, &c.value);
        for i in 0..n {
            let (bi, bj) = (b.value(i), b.value(j));
            o.add_commutator(1.0, b.d(i, i), bj);
            o.add_commutator(1.0, bi, b.d(i, j));
            let mut fij = b.d(i, j) - b.d(j, i);
            fij.add_commutator(1.0, bi, bj);
            o.add_commutator(1.0, bi, &fij);
            o.add_commutator(1.0, b.d(j, i), u.value(i));
            o.add_commutator(1.0, bi, u.d(j, i));
        }
        o.add_commutator(1.0, b.value(j), &div);
    }
    Ok(out)
}

/// De-Turck flow right-hand side in physical coordinates, `-D_psi* F_psi - D_psi D_psi* phi`.
pub fn deturck_rhs(psi: &OneFormJet, phi: &OneFormJet) -> Result<OneForm> {
    if psi.dim() != phi.dim() {
        return Err(Error::Dimension("psi and phi dimensions differ".into()));
    }
    let n = psi.dim();
    let fj = curvature_jet(psi);
    let mut out = codifferential(psi, &fj).scale(-1.0);
    let zeta = codifferential_one_form(psi, phi);
    let dzeta = codifferential_one_form_grad(psi, phi);
    for j in 0..n {
        let o = &mut out.comps[j];
        o.axpy(-1.0, &dzeta[j]);
        o.add_commutator(-1.0, psi.value(j), &zeta);
    }
    Ok(out)
}

/// `(x, t) -> (y, tau)` with `y = x / sqrt(1-t)`, `tau = -ln(1-t)`.
pub fn to_similarity(x: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    if t >= 1.0 {
        return Err(Error::Domain(format!("t = {t} is not before the blowup time 1")));
    }
    let l = (1.0 - t).sqrt();
    Ok((x.iter().map(|v| v / l).collect(), -(1.0 - t).ln()))
}

/// `(y, tau) -> (x, t)`, inverse of [`to_similarity`].
pub fn to_physical(y: &[f64], tau: f64) -> Result<(Vec<f64>, f64)> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::Domain(format!("similarity time tau = {tau} must be finite and >= 0")));
    }
    let l = (-tau / 2.0).exp();
    Ok((y.iter().map(|v| v * l).collect(), -(-tau).exp_m1()))
}

/// Jet of `u(y) = e^{-tau/2} phi(e^{-tau/2} y)` from the jet of `phi` at `x = e^{-tau/2} y`.
pub fn jet_to_similarity(phi: &OneFormJet, tau: f64) -> OneFormJet {
    rescale_jet(phi, (-tau / 2.0).exp())
}

/// Jet of `phi(x) = e^{tau/2} u(e^{tau/2} x)`, inverse of [`jet_to_similarity`].
pub fn jet_to_physical(u: &OneFormJet, tau: f64) -> OneFormJet {
    rescale_jet(u, (tau / 2.0).exp())
}

/// Jet of `c * f(c y)` at `y` from the jet of `f` at `c y`.
fn rescale_jet(f: &OneFormJet, c: f64) -> OneFormJet {
    let n = f.dim();
    let mut out = f.clone();
    for j in 0..n {
        let m = out.comp_mut(j);
        m.value = m.value.scale(c);
        for g in m.grad.iter_mut() {
            *g = g.scale(c * c);
        }
        for row in m.hess.iter_mut() {
            for h in row.iter_mut() {
                *h = h.scale(c * c * c);
            }
        }
    }
    out
}

/// Finite-difference jet: fourth-order central differences for the gradient,
/// second-order for the Hessian (symmetrized).
pub fn finite_diff_jet(f: &dyn Fn(&[f64]) -> OneForm, y: &[f64], h: f64) -> Result<OneFormJet> {
    if h <= 0.0 {
        return Err(Error::Domain("finite-difference step must be positive".into()));
    }
    let n = y.len();
    let eval = |shifts: &[(usize, f64)]| {
        let mut p = y.to_vec();
        for &(k, s) in shifts {
            p[k] += s;
        }
        f(&p)
    };
    let f0 = f(y);
    let mut comps: Vec<MatJet> = (0..n).map(|_| MatJet::zeros(n)).collect();
    for (j, c) in comps.iter_mut().enumerate() {
        c.value = f0.comps[j].clone();
    }
    for k in 0..n {
        let p1 = eval(&[(k, h)]);
        let m1 = eval(&[(k, -h)]);
        let p2 = eval(&[(k, 2.0 * h)]);
        let m2 = eval(&[(k, -2.0 * h)]);
        for (j, c) in comps.iter_mut().enumerate() {
            let mut g = (&p1.comps[j] - &m1.comps[j]).scale(8.0);
            g -= &p2.comps[j];
            g += &m2.comps[j];
            c.grad[k] = g.scale(1.0 / (12.0 * h));
            let mut d2 = &p1.comps[j] + &m1.comps[j];
            d2.axpy(-2.0, &f0.comps[j]);
            c.hess[k][k] = d2.scale(1.0 / (h * h));
        }
        for l in 0..k {
            let pp = eval(&[(k, h), (l, h)]);
            let pm = eval(&[(k, h), (l, -h)]);
            let mp = eval(&[(k, -h), (l, h)]);
            let mm = eval(&[(k, -h), (l, -h)]);
            for (j, c) in comps.iter_mut().enumerate() {
                let mut d = &pp.comps[j] - &pm.comps[j];
                d -= &mp.comps[j];
                d += &mm.comps[j];
                let d = d.scale(1.0 / (4.0 * h * h));
                c.hess[k][l] = d.clone();
                c.hess[l][k] = d;
            }
        }
    }
    Ok(OneFormJet::from_components(comps))
}
