//! Linearly implicit Euler extrapolation for `x' = M x + g(x)`.
//!
//! The stiff linear part acts on the first `k` state entries and is treated
//! implicitly; `g` is explicit. A basic step of size `H` runs implicit-explicit
//! Euler with `1, 2, ..., q` substeps and extrapolates the results with the
//! Aitken-Neville scheme in `H`, giving order `q` and an embedded error estimate.

use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::error::{Error, Result};

/// Integrator settings.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ImexOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Extrapolation order (number of Euler sequences).
    pub order: usize,
    /// Initial number of basic steps per output interval.
    pub initial_steps: usize,
    /// Hard cap on basic steps per output interval.
    pub max_steps: usize,
}

impl Default for ImexOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, order: 5, initial_steps: 4, max_steps: 1 << 16 }
    }
}

/// Step statistics of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct ImexStats {
    pub steps: usize,
    pub rejected_intervals: usize,
    pub factorizations: usize,
}

type Lu = LU<f64, Dyn, Dyn>;

const CACHE_SIZE: usize = 48;

/// Extrapolated implicit-explicit Euler stepper with a cache of factorizations.
pub struct Imex<'a> {
    m: &'a DMatrix<f64>,
    opts: ImexOptions,
    cache: Vec<(u64, Lu)>,
    pub stats: ImexStats,
}

impl<'a> Imex<'a> {
    pub fn new(m: &'a DMatrix<f64>, opts: ImexOptions) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("implicit operator must be square".into()));
        }
        if !(1..=8).contains(&opts.order) || opts.rtol <= 0.0 || opts.atol <= 0.0 || opts.initial_steps == 0 {
            return Err(Error::Domain(format!("invalid integrator options {opts:?}")));
        }
        Ok(Self { m, opts, cache: Vec::new(), stats: ImexStats::default() })
    }

    fn factor(&mut self, h: f64) -> usize {
        let key = h.to_bits();
        if let Some(i) = self.cache.iter().position(|(k, _)| *k == key) {
            return i;
        }
        let k = self.m.nrows();
        let a = DMatrix::<f64>::identity(k, k) - self.m * h;
        if self.cache.len() >= CACHE_SIZE {
            self.cache.remove(0);
        }
        self.cache.push((key, a.lu()));
        self.stats.factorizations += 1;
        self.cache.len() - 1
    }

    /// `nsub` Euler substeps of size `h / nsub`; `g0` is `g(x)`.
    fn sweep(&mut self, x: &[f64], g0: &[f64], h: f64, nsub: usize, g: &mut dyn FnMut(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let hs = h / nsub as f64;
        let idx = self.factor(hs);
        let k = self.m.nrows();
        let mut cur = x.to_vec();
        for s in 0..nsub {
            let gv = if s == 0 { g0.to_vec() } else { g(&cur) };
            let rhs = DVector::from_iterator(k, (0..k).map(|i| cur[i] + hs * gv[i]));
            let sol = self.cache[idx].1.solve(&rhs).unwrap_or_else(|| DVector::from_element(k, f64::NAN));
            for i in 0..k {
                cur[i] = sol[i];
            }
            for i in k..cur.len() {
                cur[i] += hs * gv[i];
            }
        }
        cur
    }

    /// One extrapolated step; returns the new state and the scaled error estimate.
    pub fn step(&mut self, x: &[f64], h: f64, g: &mut dyn FnMut(&[f64]) -> Vec<f64>) -> (Vec<f64>, f64) {
        let q = self.opts.order;
        let g0 = g(x);
        let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(q);
        for j in 0..q {
            let mut row = vec![self.sweep(x, &g0, h, j + 1, g)];
            for l in 1..=j {
                let ratio = (j + 1) as f64 / (j + 1 - l) as f64;
                let (a, b) = (&row[l - 1], &table[j - 1][l - 1]);
                row.push(a.iter().zip(b).map(|(ai, bi)| ai + (ai - bi) / (ratio - 1.0)).collect());
            }
            table.push(row);
        }
        self.stats.steps += 1;
        let best = table[q - 1][q - 1].clone();
        if q == 1 {
            return (best, 0.0);
        }
        let prev = &table[q - 1][q - 2];
        // field entries are measured against the field's sup norm, extra
        // entries componentwise
        let k = self.m.nrows();
        let sup = x[..k].iter().chain(&best[..k]).fold(0.0f64, |a, v| a.max(v.abs()));
        let mut acc = 0.0;
        for i in 0..best.len() {
            let size = if i < k { sup } else { x[i].abs().max(best[i].abs()) };
            let sc = self.opts.atol + self.opts.rtol * size;
            acc += ((best[i] - prev[i]) / sc).powi(2);
        }
        let err = (acc / best.len() as f64).sqrt();
        (best, if err.is_finite() { err } else { f64::INFINITY })
    }

    /// Integrates through the output times, calling `observe(i, state)` at each
    /// (including the first); stops early when `observe` returns `false`.
    pub fn integrate(
        &mut self,
        x0: &[f64],
        times: &[f64],
        g: &mut dyn FnMut(&[f64]) -> Vec<f64>,
        observe: &mut dyn FnMut(usize, &[f64]) -> bool,
    ) -> Result<Vec<f64>> {
        if x0.len() < self.m.nrows() {
            return Err(Error::Dimension(format!("state of length {} for operator of size {}", x0.len(), self.m.nrows())));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("output times must increase".into()));
        }
        let mut x = x0.to_vec();
        if !observe(0, &x) {
            return Ok(x);
        }
        let q = self.opts.order as f64;
        let mut k = self.opts.initial_steps;
        for (i, w) in times.windows(2).enumerate() {
            let span = w[1] - w[0];
            let next = loop {
                let h = span / k as f64;
                let mut cur = x.clone();
                let mut worst: f64 = 0.0;
                let mut ok = true;
                for _ in 0..k {
                    let (y, e) = self.step(&cur, h, g);
                    if e > 1.0 || y.iter().any(|v| !v.is_finite()) {
                        ok = false;
                        break;
                    }
                    worst = worst.max(e);
                    cur = y;
                }
                if ok {
                    let fac = (0.5 / worst.max(1e-10)).powf(1.0 / q).clamp(0.25, 4.0);
                    k = ((k as f64 / fac).ceil() as usize).max(1);
                    break cur;
                }
                self.stats.rejected_intervals += 1;
                k = (2 * k).max(k + 1);
                if k > self.opts.max_steps {
                    return Err(Error::Integrator(format!(
                        "step rejection cascade in [{}, {}]; last good time {}",
                        w[0], w[1], w[0]
                    )));
                }
            };
            x = next;
            if !observe(i + 1, &x) {
                break;
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_linear_and_forced_problems() {
        // x' = -50 x + cos(t) x2, x2' = 0 with x2 = 1
        let m = DMatrix::from_element(1, 1, -50.0);
        let mut imex = Imex::new(&m, ImexOptions { rtol: 1e-10, atol: 1e-14, ..Default::default() }).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
        let mut g = |x: &[f64]| vec![x[1] * x[2].cos(), 0.0, 1.0];
        let mut out = Vec::new();
        imex.integrate(&[1.0, 1.0, 0.0], &times, &mut g, &mut |_, x| {
            out.push(x.to_vec());
            true
        })
        .unwrap();
        for (t, x) in times.iter().zip(&out) {
            // exact: x = e^{-50t} (1 - 50/2501) + (50 cos t + sin t)/2501
            let exact = (-50.0 * t).exp() * (1.0 - 50.0 / 2501.0) + (50.0 * t.cos() + t.sin()) / 2501.0;
            assert!((x[0] - exact).abs() < 1e-9, "t={t}: {} vs {exact}", x[0]);
            assert!((x[2] - t).abs() < 1e-10);
        }
    }

    #[test]
    fn nonlinear_logistic() {
        // x' = -x + x^2, x(0) = 0.5: x = 1 / (1 + e^t)
        let m = DMatrix::from_element(1, 1, -1.0);
        let mut imex = Imex::new(&m, ImexOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() }).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| 0.3 * i as f64).collect();
        let last = imex.integrate(&[0.5], &times, &mut |x| vec![x[0] * x[0]], &mut |_, _| true).unwrap();
        assert!((last[0] - 1.0 / (1.0 + 3f64.exp())).abs() < 1e-10);
    }
}
