//! Lowest eigenpairs of `-L` in the equivariant sector, with refinement and
//! far-field growth per mode.

use serde_json::json;
use ymflow::analysis::growth_check;
use ymflow::equivariant::{reduce_l, spectrum, weighted_inner, RadialGrid, RadialProfile};

use super::Lab;
use crate::config::RunConfig;
use crate::output::{plot_script, Csv, Outcome, Suite, SCHEMA_VERSION};
use crate::CliError;

const NAME: &str = "spectrum";

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lab = Lab::build(cfg)?;
    let fine_grid = RadialGrid::new(cfg.n, cfg.grid_spec().refined())?;
    let fine_op = reduce_l(&fine_grid)?;
    let modes = cfg.spectral_modes_count;
    let fine = spectrum(&fine_op, fine_grid.len())?;

    let header: Vec<String> =
        ["j", "lambda_j", "farfield_slope", "growth_bound", "refinement_delta", "overlap_residual"].map(String::from).into();
    let mut csv = Csv::new(NAME, &header);
    let mut growth_ok = true;
    let mut flagged = Vec::new();
    for j in 0..modes {
        let rep = growth_check(&lab.op, &lab.basis, j, cfg.growth_r_fit_y)?;
        growth_ok &= rep.satisfied;
        if rep.flagged {
            flagged.push(j);
        }
        let delta = (fine.lambda[j] - lab.basis.lambda[j]).abs();
        csv.nums(&[j as f64, lab.basis.lambda[j], rep.slope, rep.bound, delta, rep.overlap_residual]);
    }

    let g = RadialProfile::from_fn(&fine_grid, |r| fine_op.soliton.g_profile(r));
    let xi0 = fine.mode(0);
    let cosine = weighted_inner(&xi0, &g) / (xi0.norm() * g.norm());
    let minus_one_error = (fine.lambda[0] + 1.0).abs();
    let split = lab.basis.split_index;
    let lambda_next = lab.basis.first_positive();
    let split_stable = fine.split_index == split;

    let mut out = Outcome::default();
    out.suites.push(Suite::required(
        "time_translation_mode",
        minus_one_error < 1e-3 && cosine.abs() > 0.999,
        format!("|lambda_0 + 1| = {minus_one_error:.3e} after refinement, cosine with g {:.6}", cosine.abs()),
    ));
    out.suites.push(Suite::required(
        "growth_bound",
        growth_ok,
        format!("fitted far-field slopes within 2 lambda - 1 + 0.1 for {modes} modes; flagged continuations {flagged:?}"),
    ));
    out.suites.push(Suite::required(
        "index_stable",
        split_stable,
        format!("I = {split} on the grid, {} after refinement", fine.split_index),
    ));
    out.file(format!("{NAME}.csv"), csv.finish());
    out.json(
        format!("{NAME}.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": cfg.n,
            "K": lab.grid.len(),
            "K_refined": fine_grid.len(),
            "r_max": cfg.grid_r_max_y,
            "I": split,
            "lambda_next": lambda_next,
            "lambda": &lab.basis.lambda[..modes],
            "lambda_refined": &fine.lambda[..modes],
            "minus_one_error": minus_one_error,
            "g_cosine": cosine.abs(),
            "index_stable": split_stable,
            "growth_satisfied": growth_ok,
        }),
    );
    out.file(
        format!("plot_{NAME}.py"),
        plot_script(&format!("{NAME}.csv"), "lambda_j", &["farfield_slope", "growth_bound"], false, "far-field growth against eigenvalue"),
    );
    Ok(out)
}
