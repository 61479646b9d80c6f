use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use ymflow::equivariant::*;
use ymflow::flow::*;
use ymflow::liealg::{orthogonality_defect, so_exponential, SoMatrix};
use ymflow::operators::{codifferential_one_form, curvature, Field};
use ymflow::soliton::Soliton;

struct Lab {
    grid: Arc<RadialGrid>,
    op: ReducedOperator,
    basis: SpectralBasis,
}

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| {
        let grid = RadialGrid::new(5, GridSpec::default()).unwrap();
        let op = reduce_l(&grid).unwrap();
        let basis = spectrum(&op, grid.len()).unwrap();
        Lab { grid, op, basis }
    })
}

fn tight() -> ImexOptions {
    ImexOptions { rtol: 1e-10, atol: 1e-16, ..Default::default() }
}

/// Smooth profile projected onto the positive modes, scaled to weighted norm `eps`.
fn positive_data(eps: f64) -> RadialProfile {
    let l = lab();
    let phi = RadialProfile::from_fn(&l.grid, |r| (-r * r / 2.0).exp() * (1.0 + r * r));
    let pos = project(&l.basis, Relation::Gt, 0.0, &phi);
    let s = eps / pos.norm();
    RadialProfile { values: pos.values.iter().map(|v| v * s).collect(), ..pos }
}

fn picard_runs() -> &'static Vec<(f64, ModeSeries, PicardReport)> {
    static RUNS: OnceLock<Vec<(f64, ModeSeries, PicardReport)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let l = lab();
        [1e-2, 3e-3, 1e-3]
            .into_iter()
            .map(|eps| {
                let (u, rep) = picard_construct(&l.op, &l.basis, &positive_data(eps), &PicardOptions::standard()).unwrap();
                (eps, u, rep)
            })
            .collect()
    })
}

fn initial_slice(u: &ModeSeries) -> RadialProfile {
    let l = lab();
    let c: Vec<f64> = u.coeffs.column(0).iter().copied().collect();
    RadialProfile::new(l.grid.clone(), l.basis.reconstruct(&c)).unwrap()
}

#[test]
fn duhamel_reproduces_single_mode_closed_forms() {
    let tau = TauGrid::uniform(12.0, 12_000);
    let h = ModeSeries::from_fn(tau.clone(), 2, |_, t| (-2.0 * t).exp()).unwrap();
    let u = duhamel_solve(&h, &[1.0, -1.0], 1e-8).unwrap();
    for (k, &t) in tau.iter().enumerate() {
        let forward = (-t).exp() - (-2.0 * t).exp();
        let backward = -(-2.0 * t).exp() / 3.0;
        assert!((u.coeffs[(0, k)] - forward).abs() < 1e-9, "forward at {t}");
        assert!((u.coeffs[(1, k)] - backward).abs() < 1e-9, "backward at {t}");
    }
}

#[test]
fn duhamel_positive_modes_start_at_zero() {
    let l = lab();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tau = TauGrid::layered(16.0, 1.0 / 32.0, 1e-5, 0.25).unwrap();
    let j = 12;
    for _ in 0..5 {
        let amp: Vec<f64> = (0..j).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rate: Vec<f64> = (0..j).map(|_| rng.random_range(1.5..4.0)).collect();
        let h = ModeSeries::from_fn(tau.clone(), j, |m, t| amp[m] * (-rate[m] * t).exp() * (3.0 * t).cos()).unwrap();
        let u = duhamel_solve(&h, &l.basis.lambda[..j], 1e-8).unwrap();
        for m in 0..j {
            if l.basis.lambda[m] > 0.0 {
                assert!(u.coeffs[(m, 0)].abs() < 1e-10);
            }
        }
        let nonpositive = (0..j).filter(|&m| l.basis.lambda[m] <= 0.0).count();
        assert!(nonpositive >= 1);
    }
    let zero = ModeSeries::zeros(tau, j).unwrap();
    let u = duhamel_solve(&zero, &l.basis.lambda[..j], 1e-8).unwrap();
    assert_eq!(u.sup_norm(), 0.0);
}

#[test]
fn duhamel_rejects_short_horizon_for_slow_sources() {
    let tau = TauGrid::uniform(2.0, 200);
    let h = ModeSeries::from_fn(tau, 1, |_, _| 1.0).unwrap();
    assert!(duhamel_solve(&h, &[-1.0], 1e-8).is_err());
}

#[test]
fn picard_contracts_with_quadratic_correction() {
    let runs = picard_runs();
    let mut pts = Vec::new();
    for (eps, _, rep) in runs {
        assert!(rep.converged);
        assert!(rep.max_contraction() < 1.0, "eps {eps}: {:?}", rep.contraction);
        assert!(rep.projection_defect < 1e-8 * eps.max(1.0), "eps {eps}: defect {}", rep.projection_defect);
        assert!((rep.iota_norm - eps).abs() < 1e-9 * eps);
        pts.push((eps.ln(), rep.correction.ln()));
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.1, "correction slope {slope}");
}

#[test]
fn picard_with_zero_data_is_zero() {
    let l = lab();
    let (u, rep) = picard_construct(&l.op, &l.basis, &RadialProfile::zeros(&l.grid), &PicardOptions::standard()).unwrap();
    assert_eq!(rep.iterations, 1);
    assert_eq!(u.sup_norm(), 0.0);
}

#[test]
fn picard_fixed_point_survives_reevolution() {
    let l = lab();
    let (_, u, _) = &picard_runs()[0];
    let v0 = initial_slice(u);
    let opts = EvolveOptions { sample_dt: 0.25, modes: l.basis.len(), imex: tight() };
    let trace = evolve_rescaled(&l.op, Some(&l.basis), &v0, 8.0, &opts).unwrap();
    let mismatch = reevolution_mismatch(u, &l.basis, &trace);
    assert!(mismatch < 1e-5, "re-evolution mismatch {mismatch:.3e}");

    // decay of the positive-spectrum solution; faster modes bias the rate
    // upwards by an amount the drift term accounts for
    let c = l.basis.coefficients(&v0.values);
    let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let prediction = (0..l.basis.len())
        .filter(|&j| l.basis.lambda[j] > 0.0 && c[j].abs() > 1e-6 * cn)
        .map(|j| l.basis.lambda[j])
        .fold(f64::INFINITY, f64::min);
    let lam_next = l.basis.first_positive().unwrap();
    let fit = decay_fit(&trace, (3.0, 8.0)).unwrap();
    assert!(fit.reliable);
    assert!((fit.rate - prediction).abs() < 0.05 * prediction, "rate {} vs {prediction}", fit.rate);
    assert!(fit.rate > 0.0 && fit.rate <= lam_next + fit.ci + fit.drift, "rate {} above {lam_next}", fit.rate);
}

#[test]
fn g_seeded_run_grows_at_rate_one() {
    let l = lab();
    let g = RadialProfile::from_fn(&l.grid, |r| l.op.soliton.g_profile(r));
    let s = 1e-4 / g.norm();
    let v0 = RadialProfile { values: g.values.iter().map(|v| v * s).collect(), ..g };
    let opts = EvolveOptions { sample_dt: 0.1, modes: 6, imex: ImexOptions { atol: 1e-18, ..tight() } };
    let trace = evolve_rescaled(&l.op, Some(&l.basis), &v0, 3.0, &opts).unwrap();
    let fit = fit_rate(&trace.tau, &trace.mode_series(0), (0.0, 3.0)).unwrap();
    assert!((fit.rate + 1.0).abs() < 0.05, "growth rate {}", -fit.rate);
}

#[test]
fn low_modes_follow_the_linear_semigroup() {
    let l = lab();
    let eps = 1e-5;
    let c: Vec<f64> = (0..l.basis.len()).map(|j| if j < 5 { eps } else { 0.0 }).collect();
    let v0 = RadialProfile::new(l.grid.clone(), l.basis.reconstruct(&c)).unwrap();
    let opts = EvolveOptions { sample_dt: 0.25, modes: 5, imex: ImexOptions { atol: 1e-20, ..tight() } };
    let trace = evolve_rescaled(&l.op, Some(&l.basis), &v0, 1.5, &opts).unwrap();
    for j in 0..5 {
        let series = trace.mode_series(j);
        for (t, cj) in trace.tau.iter().zip(&series) {
            let expect = eps * (-l.basis.lambda[j] * t).exp();
            let folds = (l.basis.lambda[j] * t).abs().max(1.0);
            assert!((cj - expect).abs() < 0.03 * folds * expect.abs(), "mode {j} at {t}: {cj} vs {expect}");
        }
    }
}

#[test]
fn soliton_data_blows_up_at_type_one_rate() {
    let l = lab();
    let q0 = RadialProfile::from_fn(&l.grid, |r| l.op.soliton.profile(r));
    let opts = BlowupOptions { imex: ImexOptions { atol: 1e-14, ..tight() }, ..Default::default() };
    let trace = evolve_unrescaled(&l.op, &q0, &opts).unwrap();
    assert!(trace.halted.is_some());
    let r0 = trace.ratio[0];
    let mut reached = false;
    for i in 0..trace.len() {
        if trace.one_minus_t[i] >= 1e-4 {
            assert!((trace.ratio[i] / r0 - 1.0).abs() < 0.01, "ratio drift at 1-t = {}", trace.one_minus_t[i]);
        } else {
            reached = true;
        }
    }
    assert!(reached);
    let peak = trace.curvature_sup.iter().copied().fold(0.0, f64::max);
    assert!(peak > 1e6, "peak curvature {peak:.3e}");
    // the rescaled profile stays the soliton
    assert!(trace.norm_rho.iter().all(|&x| x < 1e-6), "{:?}", trace.norm_rho.last());
}

#[test]
fn zero_connection_is_stationary() {
    let l = lab();
    // without rescaling s is physical time, so stay below t = 1
    let opts = BlowupOptions { sample_ds: 0.1, s_max: 0.9, imex: ImexOptions { atol: 1e-14, ..tight() }, ..Default::default() };
    let trace = evolve_unrescaled(&l.op, &RadialProfile::zeros(&l.grid), &opts).unwrap();
    assert!(trace.halted.is_none(), "{:?}", trace.halted);
    // the state is stored relative to the soliton, so zero is stationary up to
    // the discrete soliton residual
    for p in &trace.profiles {
        assert!(p.iter().all(|x| x.abs() < 1e-5), "{}", p.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    }
    let fs = &trace.curvature_sup;
    assert!(fs.iter().all(|&f| f < 1e-3), "{fs:?}");
    assert!(fs[fs.len() - 1] < 1.05 * fs[1], "{fs:?}");
}

#[test]
fn rescaled_and_physical_runs_agree() {
    let l = lab();
    let v0 = positive_data(1e-2);
    let q0 = RadialProfile {
        values: v0.values.iter().zip(&l.grid.r).map(|(v, &r)| v + l.op.soliton.profile(r)).collect(),
        ..v0.clone()
    };
    let opts = BlowupOptions { sample_ds: 1.5, s_max: 1.5, imex: ImexOptions { atol: 1e-14, ..tight() }, ..Default::default() };
    let phys = evolve_unrescaled(&l.op, &q0, &opts).unwrap();
    let last = phys.len() - 1;
    let (omt, scale) = (phys.one_minus_t[last], phys.scale[last]);
    let tau = -omt.ln();
    let resc = evolve_rescaled(&l.op, None, &v0, tau, &EvolveOptions { sample_dt: tau, modes: 0, imex: tight() }).unwrap();
    let v = resc.profiles.last().unwrap();
    let q = RadialProfile::new(l.grid.clone(), phys.profiles[last].clone()).unwrap();
    let kappa = omt.sqrt() / scale;
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for (i, &rho) in l.grid.r.iter().enumerate().filter(|(_, &r)| r <= 8.0) {
        let b = v[i] + l.op.soliton.profile(rho);
        let (qk, _, _) = q.eval(kappa * rho).unwrap();
        worst = worst.max((b - kappa * kappa * qk).abs());
        size = size.max(b.abs());
    }
    assert!(worst < 1e-5 * size, "relative mismatch {:.3e}", worst / size);
}

#[test]
fn gauge_is_trivial_in_the_equivariant_sector() {
    let sol = Soliton::new(5).unwrap();
    let v = positive_data(1e-1);
    let field = embed(&v);
    let y = [0.7, -0.3, 1.1, 0.4, -0.9];
    let times: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
    let gen = |t: f64| {
        let phi = field.jet(&y).scale((-t).exp());
        Ok(codifferential_one_form(&sol.w_jet(&y), &phi))
    };
    let s = gauge_integrate(&times, &gen).unwrap();
    let id = DMatrix::<f64>::identity(5, 5);
    for m in &s {
        assert!((m - &id).amax() < 1e-10);
    }
}

#[test]
fn gauge_with_constant_generator_is_an_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = SoMatrix::random(6, &mut rng);
    let times: Vec<f64> = (0..=40).map(|k| 0.05 * k as f64).collect();
    let s = gauge_integrate(&times, &|_| Ok(a.clone())).unwrap();
    for (t, m) in times.iter().zip(&s) {
        let exact = so_exponential(&a.scale(-t));
        assert!((m - exact).amax() < 1e-10);
        assert!(orthogonality_defect(m) < 1e-8);
    }
    // time-dependent generator keeps S orthogonal
    let b = SoMatrix::random(6, &mut rng);
    let s = gauge_integrate(&times, &|t| Ok(&a.scale(t.sin()) + &b.scale(t * t))).unwrap();
    assert!(s.iter().all(|m| orthogonality_defect(m) < 1e-8));
}

#[test]
fn curvature_norm_is_gauge_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sol = Soliton::new(6).unwrap();
    for _ in 0..20 {
        let y: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let f = curvature(&sol.w_jet(&y));
        let s = so_exponential(&SoMatrix::random(6, &mut rng));
        let conj: f64 = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .map(|(i, j)| f.get(i, j).conjugate(&s).norm_sq())
            .sum::<f64>()
            .sqrt();
        assert!((conj - f.norm()).abs() < 1e-12 * f.norm().max(1.0));
    }
}

#[test]
fn decay_fit_recovers_synthetic_rates() {
    let tau: Vec<f64> = (0..=80).map(|k| 0.1 * k as f64).collect();
    let x: Vec<f64> = tau.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
    let fit = fit_rate(&tau, &x, (0.0, 8.0)).unwrap();
    assert!((fit.rate - 0.7).abs() < 1e-12 && fit.reliable);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let x: Vec<f64> = tau.iter().map(|t| 3.0 * (-0.7 * t + noise.sample(&mut rng)).exp()).collect();
    let fit = fit_rate(&tau, &x, (0.0, 8.0)).unwrap();
    assert!((fit.rate - 0.7).abs() < 0.02 * 0.7, "noisy rate {}", fit.rate);
    assert!((fit.rate - 0.7).abs() < fit.ci);

    // too short a window is flagged
    let fit = fit_rate(&tau, &x, (0.0, 1.0)).unwrap();
    assert!(!fit.reliable);
    assert!(fit_rate(&tau, &x, (20.0, 30.0)).is_err());
}
