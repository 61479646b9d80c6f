//! Time evolution of equivariant perturbations of the soliton.
//!
//! * [`evolve_rescaled`]: method of lines for `v_tau = L_red v + N_red(v)` in
//!   similarity variables.
//! * [`evolve_unrescaled`]: physical-time flow by dynamic rescaling.
//! * [`duhamel_solve`] and [`picard_construct`]: mode-wise variation of
//!   constants and the fixed point converging to the soliton.
//! * [`gauge_integrate`]: the gauge ODE `S^{-1} S' = -D_psi* phi` at sample points.

mod duhamel;
mod imex;

use nalgebra::DMatrix;
use serde::Serialize;

pub use duhamel::{
    duhamel_solve, iota_plus, nonlinear_modes, picard_construct, ModeSeries, PicardOptions, PicardReport,
    TauGrid,
};
pub use imex::{Imex, ImexOptions, ImexStats};

use crate::equivariant::{ReducedOperator, RadialProfile, SpectralBasis};
use crate::error::{Error, Result};
use crate::liealg::{orthogonality_defect, reorthogonalize, so_exponential, SoMatrix};
use crate::soliton::Soliton;

/// Perturbation profile at a similarity time.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub profile: RadialProfile,
    pub tau: f64,
}

impl FlowState {
    pub fn new(profile: RadialProfile, tau: f64) -> Result<Self> {
        if tau < 0.0 || profile.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("flow state must be finite at a nonnegative time".into()));
        }
        Ok(Self { profile, tau })
    }
}

/// Diagnostics sampled along a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FlowTrace {
    /// Similarity time (rescaled runs) or rescaled clock `s` (physical runs).
    pub tau: Vec<f64>,
    /// Weighted norm of the perturbation from the soliton.
    pub norm_rho: Vec<f64>,
    /// Largest nodal value of the perturbation.
    pub sup_abs: Vec<f64>,
    /// Coefficients on the lowest modes, one vector per sample.
    pub modes: Vec<Vec<f64>>,
    /// `1 - t` (physical runs).
    pub one_minus_t: Vec<f64>,
    /// Spatial scale `L(t)` (physical runs).
    pub scale: Vec<f64>,
    /// `sup_x |F(x, t)|` (physical runs).
    pub curvature_sup: Vec<f64>,
    /// `(1 - t) sup_x |F|` (physical runs).
    pub ratio: Vec<f64>,
    /// Nodal profiles at each sample (perturbation for rescaled runs, full
    /// rescaled connection for physical runs).
    #[serde(skip)]
    pub profiles: Vec<Vec<f64>>,
    pub stats: ImexStats,
    /// Reason the run stopped before its end time, if any.
    pub halted: Option<String>,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Coefficient series of mode `j`.
    pub fn mode_series(&self, j: usize) -> Vec<f64> {
        self.modes.iter().map(|m| m.get(j).copied().unwrap_or(f64::NAN)).collect()
    }
}

/// Output sampling and integrator settings.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EvolveOptions {
    pub sample_dt: f64,
    /// Number of mode coefficients recorded per sample.
    pub modes: usize,
    pub imex: ImexOptions,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { sample_dt: 0.25, modes: 6, imex: ImexOptions::default() }
    }
}

fn sample_times(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && dt > 0.0 && dt <= t_end) {
        return Err(Error::Domain(format!("end time {t_end} and sample spacing {dt} are inconsistent")));
    }
    let m = (t_end / dt).round().max(1.0) as usize;
    Ok((0..=m).map(|k| t_end * k as f64 / m as f64).collect())
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Integrates `v_tau = L_red v + N_red(v)` from `v0` to `tau_end`; modes are
/// recorded against `basis` when given.
pub fn evolve_rescaled(
    op: &ReducedOperator,
    basis: Option<&SpectralBasis>,
    v0: &RadialProfile,
    tau_end: f64,
    opts: &EvolveOptions,
) -> Result<FlowTrace> {
    check_grid(op, v0)?;
    let times = sample_times(tau_end, opts.sample_dt)?;
    let mut imex = Imex::new(&op.matrix, opts.imex)?;
    let mut trace = FlowTrace::default();
    let mut g = |x: &[f64]| op.nonlinear(x);
    let grid = op.grid.clone();
    let mut observe = |i: usize, x: &[f64]| {
        trace.tau.push(times[i]);
        trace.norm_rho.push(grid.inner(x, x).sqrt());
        trace.sup_abs.push(sup_abs(x));
        if let Some(b) = basis {
            let c = b.coefficients(x);
            trace.modes.push(c.into_iter().take(opts.modes).collect());
        }
        trace.profiles.push(x.to_vec());
        true
    };
    imex.integrate(&v0.values, &times, &mut g, &mut observe)?;
    trace.stats = imex.stats;
    Ok(trace)
}

fn check_grid(op: &ReducedOperator, v: &RadialProfile) -> Result<()> {
    if !std::sync::Arc::ptr_eq(&op.grid, &v.grid) && op.grid.r != v.grid.r {
        return Err(Error::Dimension("profile and operator live on different grids".into()));
    }
    Ok(())
}

/// Settings of [`evolve_unrescaled`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlowupOptions {
    /// Sample spacing in the rescaled clock `s`.
    pub sample_ds: f64,
    /// Largest rescaled clock.
    pub s_max: f64,
    /// Stop once `1 - t` falls below this.
    pub t_stop: f64,
    /// Stop once `sup |F|` exceeds this.
    pub curvature_cap: f64,
    pub imex: ImexOptions,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        Self { sample_ds: 0.25, s_max: 40.0, t_stop: 1e-5, curvature_cap: 1e10, imex: ImexOptions::default() }
    }
}

/// Largest curvature norm of the equivariant field with profile `q` over the nodes.
pub fn curvature_sup(grid: &crate::equivariant::RadialGrid, q: &[f64]) -> f64 {
    let dq = grid.derivative(q);
    grid.r
        .iter()
        .zip(q.iter().zip(&dq))
        .map(|(&r, (&w, &dw))| Soliton::equivariant_curvature_norm(grid.n, r, w, dw))
        .fold(0.0, f64::max)
}

/// Physical-time equivariant flow from the connection profile `q0` at `t = 0`.
///
/// The solution is written `A(x, t) = L^{-1} B(x / L, s)` with `ds/dt = L^{-2}`,
/// and `L` is chosen so that the profile of `B` keeps its value at the origin.
/// Then `q_s = [rescaled flow](q) + (beta + 1/2)(2q + r q')` with `beta = d ln L / ds`,
/// `d(1 - t)/ds = -L^2`, and `sup |F_A| = L^{-2} sup |F_B|`, so the physical step
/// `dt = L^2 ds` shrinks like `1 / sup |F|`. A profile vanishing at the origin is
/// evolved without rescaling.
pub fn evolve_unrescaled(op: &ReducedOperator, q0: &RadialProfile, opts: &BlowupOptions) -> Result<FlowTrace> {
    check_grid(op, q0)?;
    let grid = op.grid.clone();
    let k = grid.len();
    let f: Vec<f64> = grid.r.iter().map(|&r| op.soliton.profile(r)).collect();
    let times = sample_times(opts.s_max, opts.sample_ds)?;
    let anchor = q0.values[0];
    let rescale = anchor.abs() > 1e-12;
    // state: v = q - f, ln L, 1 - t
    let mut x0: Vec<f64> = q0.values.iter().zip(&f).map(|(q, fi)| q - fi).collect();
    x0.extend([0.0, 1.0]);
    let mut g = |x: &[f64]| {
        let v = &x[..k];
        let mut out = op.nonlinear(v);
        let q: Vec<f64> = v.iter().zip(&f).map(|(a, b)| a + b).collect();
        let c = if rescale {
            let mv0: f64 = op.matrix.row(0).iter().zip(v).map(|(m, a)| m * a).sum();
            -(mv0 + out[0]) / (2.0 * q[0])
        } else {
            0.5
        };
        let dq = grid.derivative(&q);
        for i in 0..k {
            out[i] += c * (2.0 * q[i] + grid.r[i] * dq[i]);
        }
        out.push(c - 0.5);
        out.push(-(2.0 * x[k]).exp());
        out
    };
    let mut trace = FlowTrace::default();
    let mut observe = |i: usize, x: &[f64]| {
        let v = &x[..k];
        let q: Vec<f64> = v.iter().zip(&f).map(|(a, b)| a + b).collect();
        let l = x[k].exp();
        let omt = x[k + 1];
        let fsup = curvature_sup(&grid, &q) / (l * l);
        trace.tau.push(times[i]);
        trace.norm_rho.push(grid.inner(v, v).sqrt());
        trace.sup_abs.push(sup_abs(v));
        trace.one_minus_t.push(omt);
        trace.scale.push(l);
        trace.curvature_sup.push(fsup);
        trace.ratio.push(omt * fsup);
        trace.profiles.push(q);
        if !fsup.is_finite() || fsup > opts.curvature_cap {
            trace.halted = Some(format!("curvature {fsup:.3e} above cap at s = {}", times[i]));
            return false;
        }
        if omt < opts.t_stop {
            trace.halted = Some(format!("1 - t = {omt:.3e} below stop at s = {}", times[i]));
            return false;
        }
        true
    };
    let mut imex = Imex::new(&op.matrix, opts.imex)?;
    imex.integrate(&x0, &times, &mut g, &mut observe)?;
    trace.stats = imex.stats;
    Ok(trace)
}

/// Integrates `S' = S G(t)` with `G = -D_psi* phi` supplied at the sample times,
/// using midpoint exponential steps and re-orthogonalization. Returns `S` at every
/// sample, starting from the identity.
pub fn gauge_integrate(times: &[f64], generator: &dyn Fn(f64) -> Result<SoMatrix>) -> Result<Vec<DMatrix<f64>>> {
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("gauge sample times must increase".into()));
    }
    let n = generator(times[0])?.dim();
    let mut s = DMatrix::<f64>::identity(n, n);
    let mut out = vec![s.clone()];
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let mid = generator(0.5 * (w[0] + w[1]))?;
        s = reorthogonalize(&(s * so_exponential(&mid.scale(-dt))));
        let drift = orthogonality_defect(&s);
        if drift > 1e-8 {
            return Err(Error::Integrator(format!("orthogonality drift {drift:.3e} at t = {}", w[1])));
        }
        out.push(s.clone());
    }
    Ok(out)
}

/// Least-squares exponential rate of a positive series.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayFit {
    /// `-d log|x| / d tau`.
    pub rate: f64,
    /// Root-mean-square residual of the log fit.
    pub residual: f64,
    /// Half width of a 95% confidence interval for the rate.
    pub ci: f64,
    /// Difference between the rate on the whole window and on its later half;
    /// a model-bias allowance for tails that are not yet purely exponential.
    pub drift: f64,
    /// Number of e-foldings covered by the window.
    pub efoldings: f64,
    /// False when the tail is non-monotone or covers fewer than three e-foldings.
    pub reliable: bool,
}

/// Fits `|x| ~ C e^{-rate tau}` on the samples inside `window`.
pub fn fit_rate(tau: &[f64], x: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let fit = fit_log_line(tau, x, window)?;
    let mid = 0.5 * (window.0 + window.1);
    let drift = match fit_log_line(tau, x, (mid, window.1)) {
        Ok(late) => (fit.rate - late.rate).abs(),
        Err(_) => 0.0,
    };
    Ok(DecayFit { drift, ..fit })
}

fn fit_log_line(tau: &[f64], x: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = tau
        .iter()
        .zip(x)
        .filter(|(t, _)| **t >= window.0 - 1e-12 && **t <= window.1 + 1e-12)
        .map(|(&t, &v)| (t, v.abs().ln()))
        .collect();
    if pts.len() < 3 || pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Domain(format!("window {window:?} holds fewer than three usable samples")));
    }
    let m = pts.len() as f64;
    let (mt, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>() / stt;
    let ss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum();
    let residual = (ss / m).sqrt();
    let se = if pts.len() > 2 { (ss / (m - 2.0) / stt).sqrt() } else { f64::INFINITY };
    let rate = -slope;
    let efoldings = rate.abs() * (pts[pts.len() - 1].0 - pts[0].0);
    let monotone = pts.windows(2).all(|w| (w[1].1 - w[0].1) * slope.signum() >= 0.0);
    Ok(DecayFit { rate, residual, ci: 1.96 * se, drift: 0.0, efoldings, reliable: monotone && efoldings >= 3.0 })
}

/// Decay rate of the weighted norm of a trace.
pub fn decay_fit(trace: &FlowTrace, window: (f64, f64)) -> Result<DecayFit> {
    fit_rate(&trace.tau, &trace.norm_rho, window)
}

/// Relative sup-in-time distance between a mode series and an independent
/// evolution of its initial slice, compared at the trace samples.
pub fn reevolution_mismatch(series: &ModeSeries, basis: &SpectralBasis, trace: &FlowTrace) -> f64 {
    let mut worst: f64 = 0.0;
    for (t, v) in trace.tau.iter().zip(&trace.profiles) {
        let c = basis.coefficients(v);
        let s = series.at(*t);
        let d: f64 = c.iter().zip(&s).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    worst / series.sup_norm().max(f64::MIN_POSITIVE)
}
