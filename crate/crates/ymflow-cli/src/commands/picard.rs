//! Fixed-point construction for a list of data sizes, each re-evolved by the
//! time integrator.

use serde_json::json;
use ymflow::equivariant::RadialProfile;
use ymflow::flow::{decay_fit, evolve_rescaled, picard_construct, reevolution_mismatch, EvolveOptions, ImexOptions};

use super::{mode_header, picard_options, Lab};
use crate::config::RunConfig;
use crate::output::{plot_script, Csv, Outcome, Suite, SCHEMA_VERSION};
use crate::CliError;

const NAME: &str = "picard";

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lab = Lab::build(cfg)?;
    let opts = picard_options(cfg)?;
    let modes = cfg.spectral_modes_count;
    let imex = ImexOptions { rtol: cfg.flow_rtol_rel, atol: cfg.flow_atol_abs, ..Default::default() };
    let lambda_next = lab.basis.first_positive().unwrap_or(f64::NAN);

    let mut header: Vec<String> = vec!["eps".into(), "tau".into(), "norm_rho".into()];
    header.extend(mode_header(modes));
    header.push("ratio".into());
    let mut csv = Csv::new(NAME, &header);
    let mut runs = Vec::new();
    let mut pts = Vec::new();
    let mut contraction: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    let mut defect_ok = true;
    let mut converged = true;
    let mut decay_ok = true;
    for &eps in &cfg.picard_eps_list_rho {
        let data = lab.positive_data(cfg.seed, eps)?;
        let (u, rep) = picard_construct(&lab.op, &lab.basis, &data, &opts)?;
        let samples = (cfg.picard_tau_end_tau / cfg.flow_sample_dt_tau).round().max(1.0) as usize;
        for k in 0..=samples {
            let t = cfg.picard_tau_end_tau * k as f64 / samples as f64;
            let c = u.at(t);
            let v = lab.basis.reconstruct(&c);
            let mut row = vec![eps, t, c.iter().map(|x| x * x).sum::<f64>().sqrt()];
            row.extend(c.iter().take(modes));
            row.push(lab.curvature_of_perturbation(&v));
            csv.nums(&row);
        }

        let c0: Vec<f64> = u.coeffs.column(0).iter().copied().collect();
        let v0 = RadialProfile::new(lab.grid.clone(), lab.basis.reconstruct(&c0))?;
        let evolve = EvolveOptions { sample_dt: cfg.flow_sample_dt_tau, modes: lab.basis.len(), imex };
        let trace = evolve_rescaled(&lab.op, Some(&lab.basis), &v0, cfg.picard_reevolve_tau, &evolve)?;
        let m = reevolution_mismatch(&u, &lab.basis, &trace);
        let window = (cfg.flow_fit_start_tau.min(0.5 * cfg.picard_reevolve_tau), cfg.picard_reevolve_tau);
        let fit = decay_fit(&trace, window)?;
        let prediction = lab.leading_positive_rate(&v0.values);
        decay_ok &= (fit.rate - prediction).abs() < 0.05 * prediction && fit.rate > 0.0 && fit.rate <= lambda_next + fit.ci + fit.drift;

        contraction = contraction.max(rep.max_contraction());
        mismatch = mismatch.max(m);
        defect_ok &= rep.projection_defect < 1e-8 * eps.max(1.0);
        converged &= rep.converged;
        pts.push((eps.ln(), rep.correction.ln()));
        runs.push(json!({
            "eps": eps,
            "iterations": rep.iterations,
            "contraction_factor": rep.max_contraction(),
            "contraction": rep.contraction,
            "correction": rep.correction,
            "projection_defect": rep.projection_defect,
            "converged": rep.converged,
            "reevolution_mismatch": m,
            "fitted_delta": fit.rate,
            "delta_ci": fit.ci,
            "delta_drift": fit.drift,
            "delta_prediction": prediction,
        }));
    }
    let slope = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
    });

    let mut out = Outcome::default();
    out.suites.push(Suite::required(
        "contraction",
        contraction < 1.0 && converged,
        format!("largest contraction factor {contraction:.3e}; all converged: {converged}"),
    ));
    if let Some(s) = slope {
        out.suites.push(Suite::required("quadratic_correction", (s - 2.0).abs() < 0.1, format!("log-log slope of the correction {s:.4}")));
    }
    out.suites.push(Suite::required("projection", defect_ok, "positive part of u(0) matches the data".into()));
    out.suites.push(Suite::required(
        "reevolution",
        mismatch < 1e-5,
        format!("largest relative mismatch {mismatch:.3e} up to tau = {}", cfg.picard_reevolve_tau),
    ));
    out.suites.push(Suite::required("decay_rate", decay_ok, format!("fitted delta within 5% of the linear prediction and at most {lambda_next:.6}")));
    out.file(format!("{NAME}.csv"), csv.finish());
    out.json(
        format!("{NAME}.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": cfg.n,
            "lambda_next": lambda_next,
            "contraction_factor": contraction,
            "correction_slope": slope,
            "reevolution_mismatch": mismatch,
            "runs": runs,
        }),
    );
    out.file(format!("plot_{NAME}.py"), plot_script(&format!("{NAME}.csv"), "tau", &["norm_rho"], true, "fixed points by data size"));
    Ok(out)
}
