//! Curvature certificate that the cut-off soliton is not equivariant.

use serde_json::json;
use ymflow::analysis::{certify_nonequivariant, CutoffReading};
use ymflow::soliton::constants;

use crate::config::RunConfig;
use crate::output::{plot_script, Csv, Outcome, Suite, SCHEMA_VERSION};
use crate::CliError;

const NAME: &str = "certify-nonequivariant";

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = constants(cfg.n)?;
    let limit = 2f64.sqrt() * (2.0 * p.a - 1.0) / (p.a * p.a);
    let header: Vec<String> =
        ["R", "lhs", "rhs", "margin", "reading", "scaled_margin", "formula", "formula_error"].map(String::from).into();
    let mut csv = Csv::new(NAME, &header);
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut radii = cfg.certificate_radii_y.clone();
    radii.sort_by(f64::total_cmp);
    for reading in cfg.certificate_reading.readings() {
        let mut all = true;
        let mut last = None;
        for &r in &radii {
            let row = certify_nonequivariant(cfg.n, r, reading)?;
            csv.row(&[
                r.to_string(),
                row.lhs.to_string(),
                row.rhs.to_string(),
                row.margin.to_string(),
                reading.label().into(),
                row.scaled_margin.to_string(),
                row.formula.to_string(),
                row.formula_error.to_string(),
            ]);
            all &= row.passes;
            last = Some(row);
            rows.push(row);
        }
        let last = last.expect("at least one radius");
        let scaling = (last.scaled_margin / limit - 1.0).abs();
        let detail = format!(
            "margins positive at every radius: {all}; R^2 margin at R = {} is {:.6} against the limit {limit:.6}",
            last.radius, last.scaled_margin
        );
        match reading {
            CutoffReading::Ball => out.suites.push(Suite::required("certificate_ball", all && scaling < 0.01, detail)),
            // the shell cutoff keeps the data equivariant, so nothing separates the two points
            CutoffReading::Shell => out.suites.push(Suite::informational("certificate_shell", all, detail)),
        }
    }
    let mut formula_error: f64 = 0.0;
    for &r in &cfg.certificate_formula_radii_y {
        let row = certify_nonequivariant(cfg.n, r, CutoffReading::Ball)?;
        formula_error = formula_error.max(row.formula_error.abs());
    }
    out.suites.push(Suite::required(
        "curvature_formula",
        formula_error < 1e-10,
        format!("closed-form |F_23(-R e_1)| reproduced to {formula_error:.3e}"),
    ));
    out.file(format!("{NAME}.csv"), csv.finish());
    out.json(
        format!("{NAME}.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": cfg.n,
            "scaled_margin_limit": limit,
            "formula_max_error": formula_error,
            "rows": rows,
        }),
    );
    out.file(format!("plot_{NAME}.py"), plot_script(&format!("{NAME}.csv"), "R", &["margin", "rhs"], true, "certificate margin"));
    Ok(out)
}
