//! Property-based checks of the structural invariants.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ymflow::analysis::*;
use ymflow::equivariant::*;
use ymflow::flow::fit_rate;
use ymflow::liealg::{commutator, frobenius_inner, orthogonality_defect, sigma, so_exponential, SoMatrix};
use ymflow::operators::{curvature, MatJet, OneFormJet};
use ymflow::soliton::Soliton;

fn so_matrix(n: usize) -> impl Strategy<Value = SoMatrix> {
    prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| SoMatrix::antisymmetrize(DMatrix::from_vec(n, n, v)))
}

fn point(n: usize, radius: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-radius..radius, n)
}

fn jet_from_seed(n: usize, seed: u64) -> OneFormJet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..n)
        .map(|_| {
            let mut m = MatJet::zeros(n);
            m.value = SoMatrix::random(n, &mut rng);
            for k in 0..n {
                m.grad[k] = SoMatrix::random(n, &mut rng);
            }
            m
        })
        .collect();
    OneFormJet::from_components(comps)
}

struct Lab {
    grid: Arc<RadialGrid>,
    basis: SpectralBasis,
}

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| {
        let spec = GridSpec { elements: 16, degree: 8, ..Default::default() };
        let grid = RadialGrid::new(5, spec).unwrap();
        let op = reduce_l(&grid).unwrap();
        let basis = spectrum(&op, grid.len()).unwrap();
        Lab { grid, basis }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn algebra_stays_antisymmetric(a in so_matrix(6), b in so_matrix(6), s in -4.0..4.0f64) {
        let mut c = a.scale(s);
        c.axpy(0.5, &b);
        c.add_commutator(1.5, &a, &b);
        let size = 1.0 + a.norm() * b.norm();
        prop_assert!(c.antisymmetry_defect() <= 1e-14 * size);
        prop_assert!(commutator(&a, &b).unwrap().antisymmetry_defect() <= 1e-14 * size);
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(a in so_matrix(5), b in so_matrix(5), c in so_matrix(5)) {
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        prop_assert!((&ab + &ba).max_abs() < 1e-13);
        let j = &(&commutator(&a, &commutator(&b, &c).unwrap()).unwrap()
            + &commutator(&b, &commutator(&c, &a).unwrap()).unwrap())
            + &commutator(&c, &commutator(&a, &b).unwrap()).unwrap();
        prop_assert!(j.max_abs() < 1e-11);
    }

    #[test]
    fn sigma_is_linear_in_the_point(y in point(7, 5.0), z in point(7, 5.0), al in -2.0..2.0f64, be in -2.0..2.0f64, i in 0usize..7) {
        let w: Vec<f64> = y.iter().zip(&z).map(|(p, q)| al * p + be * q).collect();
        let mut rhs = sigma(i, &y).scale(al);
        rhs.axpy(be, &sigma(i, &z));
        prop_assert!((&sigma(i, &w) + &rhs.scale(-1.0)).max_abs() < 1e-13);
    }

    #[test]
    fn frobenius_inner_is_symmetric_and_positive(t in prop::collection::vec(so_matrix(5), 5), v in prop::collection::vec(so_matrix(5), 5)) {
        let tv = frobenius_inner(&t, &v).unwrap();
        let vt = frobenius_inner(&v, &t).unwrap();
        prop_assert!((tv - vt).abs() <= 1e-12 * (1.0 + tv.abs()));
        let tt = frobenius_inner(&t, &t).unwrap();
        prop_assert!(tt >= 0.0);
        prop_assert!(tv * tv <= tt * frobenius_inner(&v, &v).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn matrix_inequality_margin_is_nonnegative(a in so_matrix(5), b in so_matrix(5)) {
        let m = check_matrix_inequality(&a, &b).unwrap();
        prop_assert!(m >= -1e-12 * (1.0 + a.norm_sq() * b.norm_sq()), "margin {}", m);
    }

    #[test]
    fn matrix_inequality_is_an_equality_for_parallel_pairs(a in so_matrix(6), s in -3.0..3.0f64) {
        let m = check_matrix_inequality(&a, &a.scale(s)).unwrap();
        prop_assert!(m.abs() < 1e-10 * (1.0 + a.norm_sq().powi(2)));
    }

    #[test]
    fn curvature_is_antisymmetric_in_its_indices(seed in any::<u64>()) {
        let f = curvature(&jet_from_seed(5, seed));
        prop_assert!(f.max_antisymmetry_defect() < 1e-13);
        for i in 0..5 {
            prop_assert!(f.get(i, i).max_abs() == 0.0);
        }
    }

    #[test]
    fn exponential_of_so_is_orthogonal(a in so_matrix(7)) {
        prop_assert!(orthogonality_defect(&so_exponential(&a)) < 1e-12);
    }

    #[test]
    fn soliton_is_scale_invariant(x in point(5, 4.0), s in 0.1..1.0f64, lam in 0.5..2.0f64) {
        let sol = Soliton::new(5).unwrap();
        let left = sol.spacetime(&x, 1.0 - s).unwrap();
        let xl: Vec<f64> = x.iter().map(|v| lam * v).collect();
        let right = sol.spacetime(&xl, 1.0 - lam * lam * s).unwrap().scale(lam);
        prop_assert!(left.sub(&right).norm() < 1e-12 * (1.0 + left.norm()));
    }

    #[test]
    fn zeta_is_monotone_and_dominates(r1 in 0.0..3.0f64, r2 in 0.0..3.0f64) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(zeta(lo).0 <= zeta(hi).0 + 1e-15);
        prop_assert!(zeta(lo).0 >= 1.0);
    }

    #[test]
    fn cutoff_takes_values_in_the_unit_interval(s in -1.0..3.0f64, t in -1.0..3.0f64) {
        let (c, _, _) = chi(s);
        prop_assert!((0.0..=1.0).contains(&c));
        if s <= t {
            prop_assert!(chi(s).0 >= chi(t).0);
        }
    }

    #[test]
    fn decay_fit_recovers_any_exponential(rate in -1.0..3.0f64, amp in 1e-6..1e3f64) {
        let tau: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        let x: Vec<f64> = tau.iter().map(|t| amp * (-rate * t).exp()).collect();
        let fit = fit_rate(&tau, &x, (0.0, 4.0)).unwrap();
        prop_assert!((fit.rate - rate).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positive_projector_is_idempotent_and_complementary(c in prop::collection::vec(-1.0..1.0f64, 4)) {
        let l = lab();
        let phi = RadialProfile::from_fn(&l.grid, |r| (-r * r / 2.0).exp() * (c[0] + c[1] * r * r + c[2] * r.powi(4)) + c[3] / (1.0 + r * r));
        let pos = project(&l.basis, Relation::Gt, 0.0, &phi);
        let twice = project(&l.basis, Relation::Gt, 0.0, &pos);
        let neg = project(&l.basis, Relation::Le, 0.0, &phi);
        let scale = 1e-10 * (1.0 + phi.norm());
        let d: Vec<f64> = twice.values.iter().zip(&pos.values).map(|(a, b)| a - b).collect();
        prop_assert!(l.grid.inner(&d, &d).sqrt() < scale);
        let s: Vec<f64> = pos.values.iter().zip(&neg.values).zip(&phi.values).map(|((a, b), p)| a + b - p).collect();
        prop_assert!(l.grid.inner(&s, &s).sqrt() < scale);
        prop_assert!(weighted_inner(&pos, &neg).abs() < scale * (1.0 + phi.norm()));
    }

    #[test]
    fn star_norm_is_homogeneous_and_subadditive(seed in any::<u64>(), c in -3.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Separable { field: MixtureField::random(5, 2, &mut rng), rate: 0.4, tau_end: 2.0 };
        let v = Separable { field: MixtureField::random(5, 2, &mut rng), rate: 0.7, tau_end: 2.0 };
        let p = NormParams::new(0.008, 0.004, 0.3).unwrap();
        let opts = StarOptions { cylinders: 8, pairs: 16, r_span: 2.0, seed: 3 };
        let nu = star_norm(&u, &p, &opts).unwrap().star;
        let nv = star_norm(&v, &p, &opts).unwrap().star;
        let cu = star_norm(&Combination { terms: vec![(c, &u)] }, &p, &opts).unwrap().star;
        prop_assert!((cu - c.abs() * nu).abs() <= 1e-9 * (1.0 + nu));
        let sum = star_norm(&Combination { terms: vec![(1.0, &u), (1.0, &v)] }, &p, &opts).unwrap().star;
        prop_assert!(sum <= (nu + nv) * (1.0 + 1e-9));
    }
}
