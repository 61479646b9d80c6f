//! Rescaled runs near the soliton and physical-time blowup runs.

use serde_json::json;
use ymflow::equivariant::RadialProfile;
use ymflow::flow::{
    decay_fit, evolve_rescaled, evolve_unrescaled, fit_rate, picard_construct, BlowupOptions, EvolveOptions, ImexOptions,
};

use super::{mode_header, picard_options, Lab};
use crate::config::{FlowData, RunConfig};
use crate::output::{plot_script, Csv, Outcome, Suite, SCHEMA_VERSION};
use crate::CliError;

fn imex(cfg: &RunConfig) -> ImexOptions {
    ImexOptions { rtol: cfg.flow_rtol_rel, atol: cfg.flow_atol_abs, ..Default::default() }
}

pub fn run_rescaled(cfg: &RunConfig) -> Result<Outcome, CliError> {
    const NAME: &str = "flow-rescaled";
    let lab = Lab::build(cfg)?;
    let v0 = match cfg.flow_data {
        FlowData::Picard => {
            let data = lab.positive_data(cfg.seed, cfg.flow_eps_rho)?;
            let (u, _) = picard_construct(&lab.op, &lab.basis, &data, &picard_options(cfg)?)?;
            let c: Vec<f64> = u.coeffs.column(0).iter().copied().collect();
            RadialProfile::new(lab.grid.clone(), lab.basis.reconstruct(&c))?
        }
        FlowData::Positive => lab.positive_data(cfg.seed, cfg.flow_eps_rho)?,
        FlowData::GMode => {
            let g = RadialProfile::from_fn(&lab.grid, |r| lab.op.soliton.g_profile(r));
            let s = cfg.flow_eps_rho / g.norm();
            RadialProfile { values: g.values.iter().map(|v| v * s).collect(), ..g }
        }
    };
    let modes = cfg.spectral_modes_count;
    let opts = EvolveOptions { sample_dt: cfg.flow_sample_dt_tau, modes, imex: imex(cfg) };
    let trace = evolve_rescaled(&lab.op, Some(&lab.basis), &v0, cfg.flow_tau_end_tau, &opts)?;
    let ratio: Vec<f64> = trace.profiles.iter().map(|p| lab.curvature_of_perturbation(p)).collect();

    let mut header: Vec<String> = vec!["tau".into(), "norm_rho".into()];
    header.extend(mode_header(modes));
    header.push("ratio".into());
    let mut csv = Csv::new(NAME, &header);
    for i in 0..trace.len() {
        let mut row = vec![trace.tau[i], trace.norm_rho[i]];
        row.extend(&trace.modes[i]);
        row.push(ratio[i]);
        csv.nums(&row);
    }

    let lambda_next = lab.basis.first_positive().unwrap_or(f64::NAN);
    let window = (cfg.flow_fit_start_tau, cfg.flow_tau_end_tau);
    let mut out = Outcome::default();
    let summary = match cfg.flow_data {
        FlowData::Picard | FlowData::Positive => {
            let fit = decay_fit(&trace, window)?;
            let prediction = lab.leading_positive_rate(&v0.values);
            let close = (fit.rate - prediction).abs() < 0.05 * prediction;
            let bounded = fit.rate > 0.0 && fit.rate <= lambda_next + fit.ci + fit.drift;
            out.suites.push(Suite::required(
                "decay_rate",
                close && bounded && fit.reliable,
                format!(
                    "fitted delta {:.6} vs prediction {prediction:.6}; lambda_next {lambda_next:.6}, ci {:.1e}, drift {:.1e}",
                    fit.rate, fit.ci, fit.drift
                ),
            ));
            json!({"fitted_delta": fit.rate, "ci": fit.ci, "drift": fit.drift, "reliable": fit.reliable, "prediction": prediction})
        }
        FlowData::GMode => {
            let fit = fit_rate(&trace.tau, &trace.mode_series(0), (0.0, cfg.flow_tau_end_tau))?;
            let growth = -fit.rate;
            out.suites.push(Suite::required(
                "growth_rate",
                (growth - 1.0).abs() < 0.05,
                format!("fitted growth rate {growth:.6} of the time-translation mode"),
            ));
            json!({"fitted_delta": fit.rate, "ci": fit.ci, "growth_rate": growth})
        }
    };
    let (rmin, rmax) = ratio.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    out.file(format!("{NAME}.csv"), csv.finish());
    out.json(
        format!("{NAME}.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": cfg.n,
            "data": match cfg.flow_data {
                FlowData::Picard => "picard",
                FlowData::Positive => "positive",
                FlowData::GMode => "g_mode",
            },
            "eps": cfg.flow_eps_rho,
            "lambda_next": lambda_next,
            "fit_window": [window.0, window.1],
            "fit": summary,
            "type_one_bounds": {"min": rmin, "max": rmax},
            "steps": trace.stats.steps,
            "rejected_intervals": trace.stats.rejected_intervals,
        }),
    );
    out.file(format!("plot_{NAME}.py"), plot_script(&format!("{NAME}.csv"), "tau", &["norm_rho", "mode_1", "mode_2"], true, "rescaled run"));
    Ok(out)
}

pub fn run_blowup(cfg: &RunConfig) -> Result<Outcome, CliError> {
    const NAME: &str = "flow-blowup";
    let lab = Lab::build(cfg)?;
    let mut q0 = RadialProfile::from_fn(&lab.grid, |r| lab.op.soliton.profile(r));
    if cfg.blowup_eps_rho > 0.0 {
        let v = lab.positive_data(cfg.seed, cfg.blowup_eps_rho)?;
        for (q, x) in q0.values.iter_mut().zip(&v.values) {
            *q += x;
        }
    }
    let opts = BlowupOptions {
        sample_ds: cfg.blowup_sample_ds_s,
        s_max: cfg.blowup_s_max_s,
        t_stop: cfg.blowup_t_stop_abs,
        curvature_cap: cfg.blowup_curvature_cap_abs,
        imex: ImexOptions { atol: cfg.flow_atol_abs.max(1e-14), ..imex(cfg) },
    };
    let trace = evolve_unrescaled(&lab.op, &q0, &opts)?;
    let modes = cfg.spectral_modes_count;
    let f: Vec<f64> = lab.grid.r.iter().map(|&r| lab.op.soliton.profile(r)).collect();

    let mut header: Vec<String> = vec!["tau".into(), "norm_rho".into()];
    header.extend(mode_header(modes));
    header.extend(["ratio", "one_minus_t", "curvature_sup", "scale"].map(String::from));
    let mut csv = Csv::new(NAME, &header);
    for i in 0..trace.len() {
        let v: Vec<f64> = trace.profiles[i].iter().zip(&f).map(|(q, fi)| q - fi).collect();
        let c = lab.basis.coefficients(&v);
        let mut row = vec![trace.tau[i], trace.norm_rho[i]];
        row.extend(c.iter().take(modes));
        row.extend([trace.ratio[i], trace.one_minus_t[i], trace.curvature_sup[i], trace.scale[i]]);
        csv.nums(&row);
    }

    let r0 = trace.ratio[0];
    let until = cfg.blowup_check_until_abs;
    let spread = (0..trace.len())
        .filter(|&i| trace.one_minus_t[i] >= until)
        .map(|i| (trace.ratio[i] / r0 - 1.0).abs())
        .fold(0.0, f64::max);
    let reached = trace.one_minus_t.iter().any(|&x| x < until);
    let peak = trace.curvature_sup.iter().copied().fold(0.0, f64::max);
    let (rmin, rmax) = trace.ratio.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let final_omt = trace.one_minus_t.last().copied().unwrap_or(1.0);

    let mut out = Outcome::default();
    out.suites.push(Suite::required(
        "type_one_ratio",
        spread < 0.01 && reached,
        format!("(1 - t) sup|F| within {:.3e} of its initial value {r0:.6} while 1 - t >= {until:e}", spread),
    ));
    out.suites.push(Suite::required("blowup_exhibited", peak > 1e6, format!("peak sup|F| = {peak:.3e}, final 1 - t = {final_omt:.3e}")));
    out.file(format!("{NAME}.csv"), csv.finish());
    out.json(
        format!("{NAME}.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": cfg.n,
            "eps": cfg.blowup_eps_rho,
            "type_one_bounds": {"min": rmin, "max": rmax, "initial": r0, "relative_spread": spread, "checked_until_one_minus_t": until},
            "peak_curvature": peak,
            "final_one_minus_t": final_omt,
            "halted": trace.halted,
            "steps": trace.stats.steps,
        }),
    );
    out.file(
        format!("plot_{NAME}.py"),
        plot_script(&format!("{NAME}.csv"), "one_minus_t", &["ratio", "curvature_sup"], true, "Type-I ratio and curvature"),
    );
    Ok(out)
}
