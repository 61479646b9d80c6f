//! The weight `r~ = zeta(|y|)` and sampled estimates of the weighted parabolic
//! norms `|u|_0^{[d],delta}` and `|u|_{2,alpha}^{[d],delta}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::inequalities::ball_point;
use crate::equivariant::{jet_from_radial, RadialProfile, SpectralBasis};
use crate::error::{Error, Result};
use crate::flow::ModeSeries;
use crate::liealg::OneForm;
use crate::operators::{radial_to_square, scalar_times, Field, MatJet, OneFormJet, ScalarJet};

/// `zeta(r)` with its first two derivatives: 1 on `[0, 1/2]`, `r` on `[2, inf)`,
/// and on `[1/2, 2]` the quintic that joins the two with matching value, slope
/// and curvature. The quintic is `1 + (32/27) t^3 - (8/9) t^4 + (16/81) t^5`,
/// `t = r - 1/2`; its slope `(16/81) t^2 (5t^2 - 18t + 18)` is nonnegative.
pub fn zeta(r: f64) -> (f64, f64, f64) {
    if r <= 0.5 {
        (1.0, 0.0, 0.0)
    } else if r >= 2.0 {
        (r, 1.0, 0.0)
    } else {
        let t = r - 0.5;
        let (c3, c4, c5) = (32.0 / 27.0, -8.0 / 9.0, 16.0 / 81.0);
        let v = 1.0 + t * t * t * (c3 + t * (c4 + t * c5));
        let d = t * t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5));
        let dd = t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
        (v, d, dd)
    }
}

/// `r~(y) = zeta(|y|)`.
pub fn rtilde(y: &[f64]) -> f64 {
    zeta(y.iter().map(|v| v * v).sum::<f64>().sqrt()).0
}

/// Exponents of the weighted norms, `0 < alpha < gamma < 1/100`, `delta > 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormParams {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
}

impl NormParams {
    pub fn new(gamma: f64, alpha: f64, delta: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < gamma && gamma < 0.01 && delta > 0.0) {
            return Err(Error::Domain(format!(
                "need 0 < alpha < gamma < 1/100 and delta > 0 (gamma {gamma}, alpha {alpha}, delta {delta})"
            )));
        }
        Ok(Self { gamma, alpha, delta })
    }
}

/// A time-dependent so(n)-valued 1-form on `R^n x [tau_0, tau_1]`.
pub trait SpacetimeField: Sync {
    fn dim(&self) -> usize;
    fn tau_range(&self) -> (f64, f64);
    fn jet(&self, y: &[f64], tau: f64) -> OneFormJet;
    fn time_derivative(&self, y: &[f64], tau: f64) -> OneForm;
}

/// `e^{-rate tau} phi(y)` for a static field `phi`.
pub struct Separable<F: Field> {
    pub field: F,
    pub rate: f64,
    pub tau_end: f64,
}

impl<F: Field> SpacetimeField for Separable<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn tau_range(&self) -> (f64, f64) {
        (0.0, self.tau_end)
    }
    fn jet(&self, y: &[f64], tau: f64) -> OneFormJet {
        self.field.jet(y).scale((-self.rate * tau).exp())
    }
    fn time_derivative(&self, y: &[f64], tau: f64) -> OneForm {
        self.field.value(y).scale(-self.rate * (-self.rate * tau).exp())
    }
}

/// A linear combination of spacetime fields on a common time interval.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a dyn SpacetimeField)>,
}

impl SpacetimeField for Combination<'_> {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn tau_range(&self) -> (f64, f64) {
        self.terms[0].1.tau_range()
    }
    fn jet(&self, y: &[f64], tau: f64) -> OneFormJet {
        let mut out = OneFormJet::zeros(self.dim());
        for (c, f) in &self.terms {
            out.axpy(*c, &f.jet(y, tau));
        }
        out
    }
    fn time_derivative(&self, y: &[f64], tau: f64) -> OneForm {
        let mut out = OneForm::zeros(self.dim());
        for (c, f) in &self.terms {
            out.axpy(*c, &f.time_derivative(y, tau));
        }
        out
    }
}

/// `r~(y)^power M_j` for a fixed 1-form `M`.
pub struct RadialWeightField {
    pub m: OneForm,
    pub power: f64,
}

impl Field for RadialWeightField {
    fn dim(&self) -> usize {
        self.m.dim()
    }

    fn jet(&self, y: &[f64]) -> OneFormJet {
        let n = y.len();
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (z, dz, ddz) = zeta(r);
        let p = self.power;
        let v = z.powf(p);
        let dv = p * z.powf(p - 1.0) * dz;
        let ddv = p * (p - 1.0) * z.powf(p - 2.0) * dz * dz + p * z.powf(p - 1.0) * ddz;
        let (f, df, ddf) = if dv == 0.0 && ddv == 0.0 { (v, 0.0, 0.0) } else { radial_to_square(r, v, dv, ddv) };
        let s = ScalarJet::of_square_radius(y, f, df, ddf);
        let comps = (0..n)
            .map(|j| scalar_times(&s, &MatJet { value: self.m.comps[j].clone(), ..MatJet::zeros(n) }))
            .collect();
        OneFormJet::from_components(comps)
    }

    fn label(&self) -> String {
        format!("r~^{} M", self.power)
    }
}

/// The equivariant field `sigma_j(y) v(|y|, tau)` whose profile has the mode
/// coefficients of `series` in `basis`, linearly interpolated in time.
pub struct EquivariantSeries<'a> {
    pub basis: &'a SpectralBasis,
    pub series: &'a ModeSeries,
}

impl EquivariantSeries<'_> {
    fn profile(&self, tau: f64) -> RadialProfile {
        let c = self.series.at(tau);
        let grid = self.basis.grid.clone();
        RadialProfile { values: self.basis.reconstruct(&c[..self.basis.len().min(c.len())]), grid }
    }

    fn radial(&self, y: &[f64], tau: f64) -> OneFormJet {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (v, dv, ddv) = self.profile(tau).eval(r).unwrap_or((0.0, 0.0, 0.0));
        jet_from_radial(y, r, v, dv, ddv)
    }
}

impl SpacetimeField for EquivariantSeries<'_> {
    fn dim(&self) -> usize {
        self.basis.grid.n
    }
    fn tau_range(&self) -> (f64, f64) {
        (0.0, self.series.horizon())
    }
    fn jet(&self, y: &[f64], tau: f64) -> OneFormJet {
        self.radial(y, tau)
    }
    fn time_derivative(&self, y: &[f64], tau: f64) -> OneForm {
        let (t0, t1) = self.tau_range();
        let h = 1e-3;
        let (a, b) = ((tau - h).max(t0), (tau + h).min(t1));
        let mut d = self.radial(y, b).value_form();
        d.axpy(-1.0, &self.radial(y, a).value_form());
        d.scale(1.0 / (b - a))
    }
}

/// Sampling plan of [`star_norm`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StarOptions {
    /// Number of unit parabolic cylinders `B_1(y) x [tau - 1, tau]`.
    pub cylinders: usize,
    /// Point pairs per cylinder, stratified over eight separation scales.
    pub pairs: usize,
    /// Cylinder centers are drawn from `|y| <= r_span`.
    pub r_span: f64,
    pub seed: u64,
}

impl Default for StarOptions {
    fn default() -> Self {
        Self { cylinders: 48, pairs: 64, r_span: 8.0, seed: 0 }
    }
}

/// Sampled norm estimates. Every entry is a supremum over the sampled points,
/// hence a lower bound of the continuum quantity.
#[derive(Clone, Debug, Default, Serialize)]
pub struct NormReport {
    /// `sup e^{delta tau} r~^{1-gamma} |u|`.
    pub sup_zero: f64,
    /// `sup e^{delta tau} r~^{1-gamma} |D u|`.
    pub sup_gradient: f64,
    /// `sup_Q e^{delta tau_Q} r~(y_Q)^{-(gamma+alpha)} |u|_{2,alpha;Q}`.
    pub c2alpha: f64,
    /// Largest sampled Holder quotient of `D^2 u` and `d_tau u` (unweighted).
    pub holder: f64,
    /// `c2alpha + sup_zero + sup_gradient`.
    pub star: f64,
    pub cylinders: usize,
    pub pairs_per_cylinder: usize,
    pub points: usize,
    /// Set when the sampling plan is below 64 pairs or 16 cylinders.
    pub low_confidence: bool,
}

struct PointData {
    value: f64,
    grad: f64,
    hess: f64,
    dtau: f64,
    hess_entries: Vec<f64>,
    dtau_entries: Vec<f64>,
}

fn evaluate(u: &dyn SpacetimeField, y: &[f64], tau: f64) -> PointData {
    let n = u.dim();
    let jet = u.jet(y, tau);
    let dt = u.time_derivative(y, tau);
    let mut value = 0.0;
    let mut grad = 0.0;
    let mut hess_entries = Vec::with_capacity(n * n * n * n * n);
    for j in 0..n {
        value += jet.value(j).norm_sq();
        for k in 0..n {
            grad += jet.d(k, j).norm_sq();
            for l in 0..n {
                hess_entries.extend(jet.dd(k, l, j).matrix().iter().copied());
            }
        }
    }
    let hess = hess_entries.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dtau_entries: Vec<f64> = dt.comps.iter().flat_map(|m| m.matrix().iter().copied().collect::<Vec<_>>()).collect();
    PointData {
        value: value.sqrt(),
        grad: grad.sqrt(),
        hess,
        dtau: dt.norm(),
        hess_entries,
        dtau_entries,
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Default)]
struct CylinderEstimate {
    sup_zero: f64,
    sup_gradient: f64,
    c2alpha: f64,
    holder: f64,
    points: usize,
}

fn cylinder(u: &dyn SpacetimeField, p: &NormParams, opts: &StarOptions, index: usize) -> CylinderEstimate {
    let n = u.dim();
    let (t0, t1) = u.tau_range();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let yc = ball_point(&mut rng, n, opts.r_span);
    let lo = if t1 - t0 > 1.0 { t0 + 1.0 } else { t0 };
    let tc = rng.random_range(lo..=t1);
    let ts = (tc - 1.0).max(t0);
    let mut est = CylinderEstimate::default();
    let (mut s0, mut s1, mut s2, mut st, mut hold) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let weight = |y: &[f64], tau: f64| (p.delta * tau).exp() * rtilde(y).powf(1.0 - p.gamma);
    for k in 0..opts.pairs {
        let offset = ball_point(&mut rng, n, 1.0);
        let y1: Vec<f64> = yc.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let tau1 = rng.random_range(ts..=tc);
        let sep = 0.5f64.powi((k % 8) as i32) * rng.random_range(0.5..1.0);
        let dir = ball_point(&mut rng, n, 1.0);
        let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let y2: Vec<f64> = y1.iter().zip(&dir).map(|(a, d)| a + sep * d / dn).collect();
        let tau2 = (tau1 - sep * sep * rng.random_range(0.0..1.0)).max(t0);
        let a = evaluate(u, &y1, tau1);
        let b = evaluate(u, &y2, tau2);
        for (y, tau, d) in [(&y1, tau1, &a), (&y2, tau2, &b)] {
            let w = weight(y, tau);
            est.sup_zero = est.sup_zero.max(w * d.value);
            est.sup_gradient = est.sup_gradient.max(w * d.grad);
            s0 = s0.max(d.value);
            s1 = s1.max(d.grad);
            s2 = s2.max(d.hess);
            st = st.max(d.dtau);
        }
        let dist = distance(&y1, &y2) + (tau1 - tau2).abs().sqrt();
        if dist > 0.0 {
            let dh = distance(&a.hess_entries, &b.hess_entries);
            let dt = distance(&a.dtau_entries, &b.dtau_entries);
            hold = hold.max((dh + dt) / dist.powf(p.alpha));
        }
        est.points += 2;
    }
    let wc = (p.delta * tc).exp() * rtilde(&yc).powf(-(p.gamma + p.alpha));
    est.c2alpha = wc * (s0 + s1 + s2 + st + hold);
    est.holder = hold;
    est
}

/// Estimates `|u|_* = |u|_{2,alpha}^{[gamma+alpha],delta} + |u|_0^{[-1+gamma],delta}
/// + |Du|_0^{[-1+gamma],delta}` by sampling point pairs in unit parabolic cylinders.
///
/// The sup-type norms use the pointwise weight `e^{delta tau} r~(y)^{-d}`; the
/// `C^{2,alpha}` part weights the local parabolic norm of each cylinder by its
/// center. Sample sets are nested in `cylinders`, so estimates grow with it.
pub fn star_norm(u: &dyn SpacetimeField, params: &NormParams, opts: &StarOptions) -> Result<NormReport> {
    let (t0, t1) = u.tau_range();
    if !(t1 > t0) || opts.cylinders == 0 || opts.pairs == 0 || !(opts.r_span >= 0.0) {
        return Err(Error::Domain("empty sampling plan or time range".into()));
    }
    let parts: Vec<CylinderEstimate> =
        (0..opts.cylinders).into_par_iter().map(|c| cylinder(u, params, opts, c)).collect();
    let mut r = NormReport {
        cylinders: opts.cylinders,
        pairs_per_cylinder: opts.pairs,
        low_confidence: opts.pairs < 64 || opts.cylinders < 16,
        ..Default::default()
    };
    for c in parts {
        r.sup_zero = r.sup_zero.max(c.sup_zero);
        r.sup_gradient = r.sup_gradient.max(c.sup_gradient);
        r.c2alpha = r.c2alpha.max(c.c2alpha);
        r.holder = r.holder.max(c.holder);
        r.points += c.points;
    }
    r.star = r.c2alpha + r.sup_zero + r.sup_gradient;
    Ok(r)
}
