//! Kato inequality at sampled points, with the rank-one equality case and the
//! matrix inequality as companions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use ymflow::analysis::{fuzz_matrix_inequality, kato_survey, MixtureField};
use ymflow::operators::Field;
use ymflow::soliton::{Soliton, SolitonField};

use crate::config::{KatoField, RunConfig};
use crate::output::{plot_script, Csv, Outcome, Suite, SCHEMA_VERSION};
use crate::CliError;

const NAME: &str = "kato-fuzz";

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field: Box<dyn Field> = match cfg.kato_field {
        KatoField::Soliton => Box::new(SolitonField(Soliton::new(n)?)),
        KatoField::Mixture => Box::new(MixtureField::random(n, 2, &mut rng)),
    };
    let (samples, radius, h) = (cfg.kato_samples_count, cfg.kato_radius_y, cfg.kato_step_y);
    let survey = kato_survey(field.as_ref(), samples, radius, h, cfg.seed);

    let header: Vec<String> = ["index", "radius", "lhs", "rhs", "commutator_term", "margin"].map(String::from).into();
    let mut csv = Csv::new(NAME, &header);
    let mut skipped = 0;
    let mut min_margin = f64::INFINITY;
    let mut worst_point = Vec::new();
    for (i, (y, s)) in survey.iter().enumerate() {
        let Some(s) = s else {
            skipped += 1;
            continue;
        };
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        csv.nums(&[i as f64, r, s.lhs, s.rhs, s.commutator_term, s.margin()]);
        if s.margin() < min_margin {
            min_margin = s.margin();
            worst_point = y.clone();
        }
    }

    // a single matrix times a scalar function is the equality case
    let rank_one = MixtureField::random(n, 1, &mut rng);
    let eq = kato_survey(&rank_one, 200, 1.5, h, cfg.seed ^ 0x5eed);
    let eq_defect = eq
        .iter()
        .filter_map(|(_, s)| s.map(|s| s.margin().abs() / (1.0 + s.rhs.abs())))
        .fold(0.0, f64::max);
    let matrix = fuzz_matrix_inequality(n, cfg.matrix_samples_count, cfg.seed)?;

    let valid = samples - skipped;
    let mut out = Outcome::default();
    out.suites.push(Suite::required(
        "kato_inequality",
        min_margin >= -1e-5 && valid >= samples.min(1000) * 99 / 100,
        format!("{valid} valid points, smallest margin {min_margin:.3e}"),
    ));
    out.suites.push(Suite::required("kato_rank_one_equality", eq_defect < 1e-6, format!("largest relative defect {eq_defect:.3e}")));
    out.suites.push(Suite::required(
        "matrix_inequality",
        matrix.min_margin >= -1e-12,
        format!("{} pairs, smallest margin {:.3e}", matrix.samples, matrix.min_margin),
    ));
    out.file(format!("{NAME}.csv"), csv.finish());
    out.json(
        format!("{NAME}.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n": n,
            "field": field.label(),
            "samples": samples,
            "skipped": skipped,
            "min_margin": min_margin,
            "worst_point": worst_point,
            "radius_y": radius,
            "step_y": h,
            "rank_one_max_defect": eq_defect,
            "matrix": {"samples": matrix.samples, "min_margin": matrix.min_margin},
        }),
    );
    out.file(format!("plot_{NAME}.py"), plot_script(&format!("{NAME}.csv"), "radius", &["margin", "commutator_term"], true, "Kato margins"));
    Ok(out)
}
