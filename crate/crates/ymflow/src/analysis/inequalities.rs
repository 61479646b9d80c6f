//! The matrix inequality, the Frobenius Kato inequality and the Gaussian Sobolev
//! inequality, each as a pointwise check plus a seeded fuzz driver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liealg::{commutator, OneForm, SoMatrix};
use crate::operators::{scalar_times, Field, MatJet, OneFormJet, ScalarJet};
use crate::quadrature::gauss_jacobi;

/// `n (|A|^2 |B|^2 - <A, B>^2) - |[A, B]|^2`, nonnegative for every pair in so(n).
pub fn check_matrix_inequality(a: &SoMatrix, b: &SoMatrix) -> Result<f64> {
    let c = commutator(a, b)?;
    let n = a.dim() as f64;
    let ab = a.dot(b);
    Ok(n * (a.norm_sq() * b.norm_sq() - ab * ab) - c.norm_sq())
}

/// Outcome of a fuzz suite: the smallest margin seen and where.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzReport {
    pub samples: usize,
    /// Samples discarded by the operation's precondition.
    pub skipped: usize,
    pub min_margin: f64,
    /// Point of the smallest margin (matrix entries or spatial coordinates).
    pub worst_point: Vec<f64>,
}

const CHUNK: usize = 2048;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `sample(rng) -> Option<(margin, point)>` `samples` times over seeded chunks
/// in parallel; the result does not depend on the thread count.
fn fuzz<F>(samples: usize, seed: u64, sample: F) -> FuzzReport
where
    F: Fn(&mut ChaCha8Rng, usize) -> Option<(f64, Vec<f64>)> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(usize, f64, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let mut worst = (0, f64::INFINITY, Vec::new());
            for k in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                match sample(&mut rng, k) {
                    Some((m, p)) if m < worst.1 => worst = (worst.0, m, p),
                    Some(_) => {}
                    None => worst.0 += 1,
                }
            }
            worst
        })
        .collect();
    let skipped = parts.iter().map(|p| p.0).sum();
    let mut best = (f64::INFINITY, Vec::new());
    for (_, m, p) in parts {
        if m < best.0 {
            best = (m, p);
        }
    }
    FuzzReport { samples, skipped, min_margin: best.0, worst_point: best.1 }
}

fn upper_entries(m: &SoMatrix) -> impl Iterator<Item = f64> + '_ {
    let n = m.dim();
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| m.get(i, j)))
}

/// Random pairs from four families: independent, nearly parallel, commuting
/// blocks, and independent at reduced magnitude.
pub fn fuzz_matrix_inequality(n: usize, samples: usize, seed: u64) -> Result<FuzzReport> {
    if n < 2 {
        return Err(Error::Domain(format!("so({n}) has no nontrivial pairs")));
    }
    Ok(fuzz(samples, seed, |rng, k| {
        let a = SoMatrix::random(n, rng);
        let b = match k % 4 {
            0 => SoMatrix::random(n, rng),
            1 => {
                let t: f64 = rng.random_range(-2.0..2.0);
                &a.scale(t) + &SoMatrix::random(n, rng).scale(1e-3)
            }
            2 => {
                // a rotation in the (0, 1) plane commutes with one in (2, 3)
                let a2 = SoMatrix::unit(n, 0, 1).scale(rng.random_range(-1.0..1.0));
                let b2 = SoMatrix::unit(n, 2, 3).scale(rng.random_range(-1.0..1.0));
                let m = check_matrix_inequality(&a2, &b2).ok()?;
                return Some((m, upper_entries(&a2).chain(upper_entries(&b2)).collect()));
            }
            _ => SoMatrix::random(n, rng).scale(10f64.powi(-rng.random_range(1..4))),
        };
        let m = check_matrix_inequality(&a, &b).ok()?;
        Some((m, upper_entries(&a).chain(upper_entries(&b)).collect()))
    }))
}

/// Both sides of the Kato inequality at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KatoSample {
    /// `Delta |u|_F` by finite differences.
    pub lhs: f64,
    /// `<u, Delta u>/|u| + (1/n) sum_{i,j} |[d_i u_j, u_j]|^2 / |u|^3` from the jet.
    pub rhs: f64,
    /// The commutator term alone.
    pub commutator_term: f64,
}

impl KatoSample {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Evaluates the Kato inequality at `y`. The Laplacian of `|u|` uses the
/// fourth-order central stencil with step `h`, so the truncation error is
/// `O(h^4)`. Points with `|u(y)| <= h` are rejected.
pub fn check_kato(field: &dyn Field, y: &[f64], h: f64) -> Result<KatoSample> {
    let n = field.dim();
    if y.len() != n {
        return Err(Error::Dimension(format!("point of length {} for n = {n}", y.len())));
    }
    let jet = field.jet(y);
    let u = jet.value_form();
    let nu = u.norm();
    if !(nu > h) {
        return Err(Error::Domain(format!("|u| = {nu:.3e} too close to the zero set")));
    }
    let g = |z: &[f64]| field.value(z).norm();
    let mut lhs = 0.0;
    let mut z = y.to_vec();
    for k in 0..n {
        let mut at = |s: f64| {
            z[k] = y[k] + s * h;
            let v = g(&z);
            z[k] = y[k];
            v
        };
        lhs += (-at(2.0) + 16.0 * at(1.0) - 30.0 * nu + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * h * h);
    }
    let mut lap_dot = 0.0;
    let mut comm = 0.0;
    for j in 0..n {
        lap_dot += u.comps[j].dot(&jet.comp(j).laplacian());
        for i in 0..n {
            comm += commutator(jet.d(i, j), jet.value(j))?.norm_sq();
        }
    }
    let commutator_term = comm / (n as f64 * nu.powi(3));
    Ok(KatoSample { lhs, rhs: lap_dot / nu + commutator_term, commutator_term })
}

/// Uniform point in the ball of radius `radius` by rejection from the cube.
pub(crate) fn ball_point<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if y.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return y.into_iter().map(|v| v * radius).collect();
        }
    }
}

/// Kato samples at `samples` uniform points of the ball of radius `radius`, in
/// draw order; `None` marks points rejected by [`check_kato`]. The draws are
/// seeded per chunk, so the result does not depend on the thread count.
pub fn kato_survey(field: &dyn Field, samples: usize, radius: f64, h: f64, seed: u64) -> Vec<(Vec<f64>, Option<KatoSample>)> {
    let n = field.dim();
    (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = chunk_rng(seed, c);
            (c * CHUNK..((c + 1) * CHUNK).min(samples))
                .map(|_| {
                    let y = ball_point(&mut rng, n, radius);
                    let s = check_kato(field, &y, h).ok();
                    (y, s)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Kato margins `lhs - rhs` over [`kato_survey`]; rejected points count as skipped.
pub fn fuzz_kato(field: &dyn Field, samples: usize, radius: f64, h: f64, seed: u64) -> FuzzReport {
    let mut rep = FuzzReport { samples, skipped: 0, min_margin: f64::INFINITY, worst_point: Vec::new() };
    for (y, s) in kato_survey(field, samples, radius, h, seed) {
        match s {
            Some(s) if s.margin() < rep.min_margin => {
                rep.min_margin = s.margin();
                rep.worst_point = y;
            }
            Some(_) => {}
            None => rep.skipped += 1,
        }
    }
    rep
}

/// A Gaussian bump `coeff_j exp(-width |y - center|^2)`.
#[derive(Clone, Debug)]
pub struct GaussianBump {
    pub coeff: OneForm,
    pub center: Vec<f64>,
    pub width: f64,
}

/// A finite sum of Gaussian bumps. With a single bump every component is a fixed
/// matrix times one scalar function, the equality case of the Kato inequality.
#[derive(Clone, Debug)]
pub struct MixtureField {
    pub bumps: Vec<GaussianBump>,
}

impl MixtureField {
    /// `terms` bumps with random coefficients, centers in the unit ball and widths in `[0.1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, terms: usize, rng: &mut R) -> Self {
        let bumps = (0..terms)
            .map(|_| GaussianBump {
                coeff: OneForm { comps: (0..n).map(|_| SoMatrix::random(n, rng)).collect() },
                center: ball_point(rng, n, 1.0),
                width: rng.random_range(0.1..1.0),
            })
            .collect();
        Self { bumps }
    }
}

impl Field for MixtureField {
    fn dim(&self) -> usize {
        self.bumps[0].coeff.dim()
    }

    fn jet(&self, y: &[f64]) -> OneFormJet {
        let n = y.len();
        let mut comps = vec![MatJet::zeros(n); n];
        for b in &self.bumps {
            let z: Vec<f64> = y.iter().zip(&b.center).map(|(a, c)| a - c).collect();
            let e = (-b.width * z.iter().map(|v| v * v).sum::<f64>()).exp();
            let f = ScalarJet::of_square_radius(&z, e, -b.width * e, b.width * b.width * e);
            for (j, c) in comps.iter_mut().enumerate() {
                let m = MatJet { value: b.coeff.comps[j].clone(), ..MatJet::zeros(n) };
                c.axpy(1.0, &scalar_times(&f, &m));
            }
        }
        OneFormJet::from_components(comps)
    }

    fn label(&self) -> String {
        format!("gaussian mixture ({} bumps)", self.bumps.len())
    }
}

/// Both sides of `|y f|_rho <= 4n |f|_{rho,1}` for a radial function on R^n.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EckerSample {
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluates the Gaussian Sobolev inequality for a radial `f` given as
/// `r -> (f, f')`, with `|f|_{rho,1}^2 = |f|_rho^2 + |grad f|_rho^2` and the weight
/// `e^{-r^2/4}`. The integrals use composite Gauss-Legendre quadrature on `[0, 60]`;
/// the common sphere area cancels from the comparison.
pub fn check_ecker(n: usize, f: &dyn Fn(f64) -> (f64, f64)) -> EckerSample {
    let (x, w) = gauss_jacobi(16, 0, 0);
    let panels = 240;
    let width = 60.0 / panels as f64;
    let (mut yf, mut ff, mut df) = (0.0, 0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            let r = a + 0.5 * width * (xi + 1.0);
            let m = 0.5 * width * wi * r.powi(n as i32 - 1) * (-r * r / 4.0).exp();
            let (v, dv) = f(r);
            yf += m * r * r * v * v;
            ff += m * v * v;
            df += m * dv * dv;
        }
    }
    EckerSample { lhs: yf.sqrt(), rhs: 4.0 * n as f64 * (ff + df).sqrt() }
}
