//! Closed-form residuals and operator identities at random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use ymflow::liealg::SoMatrix;
use ymflow::operators::{
    finite_diff_jet, linearized_l, nonlinear_n, rescaled_rhs, scalar_times, schrodinger_a, ConnectionContext, MatJet,
    OneFormJet, ScalarJet,
};
use ymflow::soliton::{constants, Soliton, SolitonParams};

use crate::config::RunConfig;
use crate::output::{plot_script, Csv, Outcome, Suite, SCHEMA_VERSION};
use crate::CliError;

const NAME: &str = "verify-identities";

fn ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..radius)).collect();
        if y.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            return y;
        }
    }
}

/// Jet with independent random value, gradient and symmetric Hessian entries.
fn random_jet(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> OneFormJet {
    let comps = (0..n)
        .map(|_| {
            let mut m = MatJet::zeros(n);
            m.value = SoMatrix::random(n, rng).scale(scale);
            for k in 0..n {
                m.grad[k] = SoMatrix::random(n, rng).scale(scale);
                for l in 0..=k {
                    let h = SoMatrix::random(n, rng).scale(scale);
                    m.hess[k][l] = h.clone();
                    m.hess[l][k] = h;
                }
            }
            m
        })
        .collect();
    OneFormJet::from_components(comps)
}

struct Check {
    name: &'static str,
    samples: usize,
    worst: f64,
    tolerance: f64,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.n;
    let p = constants(n)?;
    let soliton = Soliton::with_params(SolitonParams { a: p.a + cfg.identities_corrupt_a_abs, ..p });
    let ctx = ConnectionContext { soliton: soliton.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.identities_points_count;
    let radius = cfg.identities_radius_y;
    let mut checks = Vec::new();

    let pts: Vec<Vec<f64>> = (0..m).map(|_| ball(&mut rng, n, radius)).collect();
    let worst = pts.iter().map(|y| soliton.residual(y).norm()).fold(0.0, f64::max);
    checks.push(Check { name: "soliton_residual", samples: m, worst, tolerance: 1e-9 });

    let mut g_worst: f64 = 0.0;
    let mut f_worst: f64 = 0.0;
    for y in &pts {
        let g = soliton.g_jet(y);
        let gv = g.value_form();
        g_worst = g_worst.max(linearized_l(&ctx, &g, y)?.sub(&gv).norm() / gv.norm().max(f64::MIN_POSITIVE));
        for alpha in 0..n {
            let f = soliton.f_alpha_jet(alpha, y);
            let fv = f.value_form().scale(0.5);
            f_worst = f_worst.max(linearized_l(&ctx, &f, y)?.sub(&fv).norm() / fv.norm().max(f64::MIN_POSITIVE));
        }
    }
    checks.push(Check { name: "eigenpair_g", samples: m, worst: g_worst, tolerance: 1e-8 });
    checks.push(Check { name: "eigenpair_f_alpha", samples: m * n, worst: f_worst, tolerance: 1e-8 });

    let mut split: f64 = 0.0;
    let mut conj: f64 = 0.0;
    for _ in 0..m {
        let y = ball(&mut rng, n, radius.min(6.0));
        let u = random_jet(&mut rng, n, 0.5);
        let w = soliton.w_jet(&y);
        let lhs = rescaled_rhs(&w.add(&u), &u, &y)?;
        let mut rhs = linearized_l(&ctx, &u, &y)?;
        rhs.axpy(1.0, &nonlinear_n(&ctx, &u, &y)?);
        split = split.max(lhs.sub(&rhs).norm() / (1.0 + rhs.norm()));
        split = split.max(rescaled_rhs(&w, &OneFormJet::zeros(n), &y)?.norm());

        let s: f64 = y.iter().map(|v| v * v).sum();
        let e = (-s / 8.0).exp();
        let gauss = ScalarJet::of_square_radius(&y, e, -e / 8.0, e / 64.0);
        let phi = OneFormJet::from_components((0..n).map(|j| scalar_times(&gauss, u.comp(j))).collect());
        let a = schrodinger_a(&ctx, &phi, &y)?;
        let l = linearized_l(&ctx, &u, &y)?.scale(-e);
        conj = conj.max(a.sub(&l).norm() / (1.0 + l.norm()));
    }
    checks.push(Check { name: "flow_splitting", samples: m, worst: split, tolerance: 1e-9 });
    checks.push(Check { name: "conjugation", samples: m, worst: conj, tolerance: 1e-8 });

    let mut fd: f64 = 0.0;
    for _ in 0..m.min(8) {
        let y = ball(&mut rng, n, 3.0);
        let (_, dg, _) = finite_diff_jet(&|q: &[f64]| soliton.w(q), &y, 1e-3)?.max_diff(&soliton.w_jet(&y));
        fd = fd.max(dg);
        let (_, dg, _) = finite_diff_jet(&|q: &[f64]| soliton.g_jet(q).value_form(), &y, 1e-3)?.max_diff(&soliton.g_jet(&y));
        fd = fd.max(dg);
        let (_, dg, _) =
            finite_diff_jet(&|q: &[f64]| soliton.f_alpha_jet(0, q).value_form(), &y, 1e-3)?.max_diff(&soliton.f_alpha_jet(0, &y));
        fd = fd.max(dg);
    }
    checks.push(Check { name: "jet_consistency", samples: m.min(8), worst: fd, tolerance: 1e-7 });

    let mut out = Outcome::default();
    let header: Vec<String> = ["index", "suite", "samples", "max_residual", "tolerance", "passed"].map(String::from).into();
    let mut csv = Csv::new(NAME, &header);
    let mut rows = Vec::new();
    for (i, c) in checks.iter().enumerate() {
        let passed = c.worst < c.tolerance;
        csv.row(&[
            i.to_string(),
            c.name.into(),
            c.samples.to_string(),
            c.worst.to_string(),
            c.tolerance.to_string(),
            passed.to_string(),
        ]);
        rows.push(json!({"suite": c.name, "samples": c.samples, "max_residual": c.worst, "tolerance": c.tolerance, "passed": passed}));
        out.suites.push(Suite::required(c.name, passed, format!("max residual {:.3e} (tolerance {:.0e})", c.worst, c.tolerance)));
    }
    out.file(format!("{NAME}.csv"), csv.finish());
    out.json(
        format!("{NAME}.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": n,
            "corrupt_a_abs": cfg.identities_corrupt_a_abs,
            "suites": rows,
            "passed": out.passed(),
        }),
    );
    out.file(
        format!("plot_{NAME}.py"),
        plot_script(&format!("{NAME}.csv"), "index", &["max_residual", "tolerance"], true, "identity residuals"),
    );
    Ok(out)
}
