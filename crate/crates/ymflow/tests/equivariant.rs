//! Radial reduction: reduced operator, spectrum, projectors, weighted pairing.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ymflow::equivariant::{
    embed, hand_nonlinearity, hand_potential, project, radial_extract, reduce_l, spectrum,
    weighted_inner, GridSpec, RadialGrid, RadialProfile, Relation,
};
use ymflow::liealg::frobenius_inner;
use ymflow::operators::{linearized_l, ConnectionContext, Field};
use ymflow::soliton::Soliton;

fn grid(n: usize) -> Arc<RadialGrid> {
    RadialGrid::new(n, GridSpec::default()).unwrap()
}

fn cosine(a: &RadialProfile, b: &RadialProfile) -> f64 {
    weighted_inner(a, b) / (a.norm() * b.norm())
}

/// Smooth random profile with `v'(0) = 0`, returned with its exact first two derivatives.
fn random_analytic(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> (f64, f64, f64) {
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w: f64 = rng.random_range(0.1..0.6);
    move |r: f64| {
        let e = (-w * r * r).exp();
        let h = (-r * r / 2.0).exp();
        let (q1, q4) = (1.0 + r * r, 4.0 + r * r);
        let v = c[0] * e + c[1] / q1 + c[2] * r * r * h + c[3] / q4;
        let dv = c[0] * (-2.0 * w * r) * e - c[1] * 2.0 * r / (q1 * q1) + c[2] * (2.0 * r - r.powi(3)) * h
            - c[3] * 2.0 * r / (q4 * q4);
        let ddv = c[0] * (4.0 * w * w * r * r - 2.0 * w) * e
            + c[1] * (6.0 * r * r - 2.0) / q1.powi(3)
            + c[2] * (2.0 - 5.0 * r * r + r.powi(4)) * h
            + c[3] * (6.0 * r * r - 8.0) / q4.powi(3);
        (v, dv, ddv)
    }
}

fn random_profile(rng: &mut ChaCha8Rng, g: &Arc<RadialGrid>) -> RadialProfile {
    let f = random_analytic(rng);
    RadialProfile::from_fn(g, |r| f(r).0)
}

fn diff_norm(g: &Arc<RadialGrid>, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    RadialProfile::new(g.clone(), d).unwrap().norm()
}

/// Adaptive Simpson quadrature, used as an oracle independent of the grid.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

#[test]
fn coefficients_match_hand_derivation() {
    for n in [5, 7, 9] {
        let op = reduce_l(&grid(n)).unwrap();
        let sol = Soliton::new(n).unwrap();
        for c in &op.coefficients {
            let scale = 1.0 + hand_potential(&sol, c.r).abs();
            assert!((c.c0 - hand_potential(&sol, c.r)).abs() < 1e-6 * scale, "n={n} r={}", c.r);
            for v in [0.3, -1.1] {
                let nl = c.alpha2 * v * v + c.alpha3 * v * v * v;
                let hand = hand_nonlinearity(&sol, c.r, v);
                assert!((nl - hand).abs() < 1e-6 * (1.0 + hand.abs()), "n={n} r={}", c.r);
            }
        }
    }
}

#[test]
fn reduced_operator_matches_radial_ode_on_random_profiles() {
    let n = 6;
    let g = grid(n);
    let op = reduce_l(&g).unwrap();
    let sol = Soliton::new(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nf = n as f64;
    for _ in 0..20 {
        let f = random_analytic(&mut rng);
        let v = RadialProfile::from_fn(&g, |r| f(r).0);
        let mv = op.apply(&v.values);
        let ode: Vec<f64> = g
            .r
            .iter()
            .map(|&r| {
                let (v, dv, ddv) = f(r);
                if r == 0.0 {
                    (nf + 2.0) * ddv + hand_potential(&sol, r) * v
                } else {
                    ddv + ((nf + 1.0) / r - r / 2.0) * dv + hand_potential(&sol, r) * v
                }
            })
            .collect();
        let scale = RadialProfile::new(g.clone(), ode.clone()).unwrap().norm();
        assert!(diff_norm(&g, &mv, &ode) < 1e-6 * scale);
    }
}

#[test]
fn tensor_operator_agrees_with_reduced_operator_off_grid_nodes() {
    let n = 5;
    let g = grid(n);
    let op = reduce_l(&g).unwrap();
    let ctx = ConnectionContext::new(n).unwrap();
    let v = RadialProfile::from_fn(&g, |r| (-r * r / 5.0).exp());
    let mv = RadialProfile::new(g.clone(), op.apply(&v.values)).unwrap();
    let field = embed(&v);
    for &r in &[0.7, 1.9, 3.3] {
        let y = [r / 2f64.sqrt(), 0.0, r / 2f64.sqrt(), 0.0, 0.0];
        let lu = linearized_l(&ctx, &field.jet(&y), &y).unwrap();
        let (x, off) = radial_extract(&lu, &y);
        assert!(off < 1e-9);
        assert!((x - mv.eval(r).unwrap().0).abs() < 1e-6, "r={r}");
    }
}

#[test]
fn weighted_inner_against_adaptive_quadrature() {
    let n = 5;
    let g = grid(n);
    let one = RadialProfile::from_fn(&g, |_| 1.0);
    let exact = 8.0 * adaptive_simpson(&|r| r.powi(6) * (-r * r / 4.0).exp(), 0.0, 16.0, 1e-13);
    assert!((weighted_inner(&one, &one) - exact).abs() < 1e-10 * exact);
    let a = RadialProfile::from_fn(&g, |r| 1.0 / (1.0 + r * r));
    let b = RadialProfile::from_fn(&g, |r| (r / 3.0).cos());
    let oracle = 8.0 * adaptive_simpson(&|r| (r / 3.0).cos() / (1.0 + r * r) * r.powi(6) * (-r * r / 4.0).exp(), 0.0, 16.0, 1e-13);
    assert!((weighted_inner(&a, &b) - oracle).abs() < 1e-10 * oracle.abs());
}

#[test]
fn weighted_inner_against_monte_carlo() {
    // E over y ~ N(0, 2 I) of <u1, u2>_F times (4 pi)^{n/2} equals the Gaussian-weighted integral.
    let n = 5;
    let g = grid(n);
    let a = RadialProfile::from_fn(&g, |r| 1.0 / (1.0 + 0.5 * r * r));
    let b = RadialProfile::from_fn(&g, |r| (-r * r / 6.0).exp());
    let (fa, fb) = (embed(&a), embed(&b));
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let normal: Vec<f64> = StandardNormal.sample_iter(&mut rng).take(200_000 * n).collect();
    let samples: Vec<f64> = normal
        .chunks(n)
        .filter_map(|z| {
            let y: Vec<f64> = z.iter().map(|v| v * 2f64.sqrt()).collect();
            if y.iter().map(|v| v * v).sum::<f64>() > 15.9 * 15.9 {
                return None;
            }
            Some(frobenius_inner(&fa.value(&y).comps, &fb.value(&y).comps).unwrap())
        })
        .collect();
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let area = 2.0 * std::f64::consts::PI.powf(2.5) / 1.329_340_388_179_137; // |S^4| = 2 pi^{5/2} / Gamma(5/2)
    let scale = (4.0 * std::f64::consts::PI).powf(2.5) / area;
    let mc = mean * scale;
    let se = (var / m).sqrt() * scale;
    let q = weighted_inner(&a, &b);
    assert!((mc - q).abs() < 3.0 * se, "{mc} +- {se} vs {q}");
}

#[test]
fn spectrum_contains_time_translation_mode() {
    for n in 5..=9 {
        let g = grid(n);
        let op = reduce_l(&g).unwrap();
        let basis = spectrum(&op, 20).unwrap();
        let sol = Soliton::new(n).unwrap();
        let gp = RadialProfile::from_fn(&g, |r| sol.g_profile(r));
        let j = basis.lambda.iter().position(|l| (l + 1.0).abs() < 1e-3).expect("eigenvalue -1");
        assert!(cosine(&basis.mode(j), &gp).abs() > 0.999, "n={n}");
        let mg = op.apply(&gp.values);
        let res: Vec<f64> = mg.iter().zip(&gp.values).map(|(a, b)| a - b).collect();
        let res = RadialProfile::new(g.clone(), res).unwrap();
        assert!(res.norm() < 1e-4 * gp.norm(), "n={n}");
        assert!(basis.split_index >= 1);
    }
}

#[test]
fn spectrum_is_stable_under_refinement() {
    let n = 5;
    let coarse = spectrum(&reduce_l(&grid(n)).unwrap(), 10).unwrap();
    let fine_grid = RadialGrid::new(n, GridSpec::default().refined()).unwrap();
    assert!(fine_grid.len() <= 1024);
    let fine = spectrum(&reduce_l(&fine_grid).unwrap(), 10).unwrap();
    for j in 0..10 {
        assert!((coarse.lambda[j] - fine.lambda[j]).abs() < 1e-3, "j={j}");
    }
    assert_eq!(coarse.split_index, fine.split_index);
    assert!((fine.lambda[coarse.split_index.min(9)] - coarse.lambda[coarse.split_index.min(9)]).abs() < 1e-3);
}

#[test]
fn spectral_basis_is_orthonormal_and_projectors_behave() {
    let n = 7;
    let g = grid(n);
    let op = reduce_l(&g).unwrap();
    assert!(op.symmetry_residual() < 1e-9);
    let basis = spectrum(&op, g.len()).unwrap();
    let gram = basis.gram();
    let k = basis.len();
    let eye = nalgebra::DMatrix::<f64>::identity(k, k);
    assert!((gram - eye).amax() < 1e-8);
    assert!(basis.lambda.windows(2).all(|w| w[0] <= w[1]));

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let v = random_profile(&mut rng, &g);
    let pos = project(&basis, Relation::Gt, 0.0, &v);
    let nonpos = project(&basis, Relation::Le, 0.0, &v);
    let pp = project(&basis, Relation::Gt, 0.0, &pos);
    assert!(diff_norm(&g, &pp.values, &pos.values) < 1e-10 * v.norm());
    let sum: Vec<f64> = pos.values.iter().zip(&nonpos.values).map(|(a, b)| a + b).collect();
    assert!(diff_norm(&g, &sum, &v.values) < 1e-10 * v.norm());
    for j in 0..4 {
        let p = project(&basis, Relation::Gt, 0.0, &basis.mode(j));
        let expect = if basis.lambda[j] > 0.0 { basis.mode(j).norm() } else { 0.0 };
        assert!((p.norm() - expect).abs() < 1e-9);
    }
    let sol = Soliton::new(n).unwrap();
    let gp = RadialProfile::from_fn(&g, |r| sol.g_profile(r));
    assert!(project(&basis, Relation::Gt, 0.0, &gp).norm() < 1e-3 * gp.norm());
}

#[test]
fn self_adjointness_on_random_pairs() {
    let n = 8;
    let g = grid(n);
    let op = reduce_l(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10 {
        let v = random_profile(&mut rng, &g);
        let w = random_profile(&mut rng, &g);
        let mv = RadialProfile::new(g.clone(), op.apply(&v.values)).unwrap();
        let mw = RadialProfile::new(g.clone(), op.apply(&w.values)).unwrap();
        let d = (weighted_inner(&mv, &w) - weighted_inner(&v, &mw)).abs();
        assert!(d < 1e-8 * v.norm() * w.norm() * (1.0 + op.matrix.amax()).sqrt());
    }
}

#[test]
fn completeness_proxy() {
    let n = 5;
    let g = grid(n);
    let basis = spectrum(&reduce_l(&g).unwrap(), g.len()).unwrap();
    let v = RadialProfile::from_fn(&g, |r| if r < 3.0 { (1.0 - (r / 3.0).powi(2)).powi(4) } else { 0.0 });
    let c = basis.coefficients(&v.values);
    let mut last = f64::INFINITY;
    for k in [2, 5, 10, 20, 40] {
        let mut ck = c.clone();
        ck[k..].iter_mut().for_each(|x| *x = 0.0);
        let rec = basis.reconstruct(&ck);
        let err: Vec<f64> = rec.iter().zip(&v.values).map(|(a, b)| a - b).collect();
        let e = RadialProfile::new(g.clone(), err).unwrap().norm();
        assert!(e <= last * (1.0 + 1e-12));
        last = e;
    }
    assert!(last < 1e-3 * v.norm());
}

#[test]
fn embed_round_trip_and_soliton_profile() {
    let n = 6;
    let g = grid(n);
    let sol = Soliton::new(n).unwrap();
    let v = RadialProfile::from_fn(&g, |r| sol.profile(r));
    let f = embed(&v);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let r = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 15.0 {
            continue;
        }
        let u = f.value(&y);
        assert!(u.sub(&sol.w(&y)).norm() < 1e-9 * (1.0 + u.norm()));
        let (x, off) = radial_extract(&u, &y);
        assert!(off < 1e-12 && (x - sol.profile(r)).abs() < 1e-9);
    }
    assert!(f.try_jet(&[20.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    assert!(v.origin_slope().abs() < 1e-6);
}
