//! Curvature certificate that `W + u0` with a localized cutoff of `W` is not
//! gauge equivalent to an equivariant connection.
//!
//! The data is `W (1 - chi(sigma(x)))`, which vanishes where the cutoff is 1.
//! Comparing `|F|` at `R e_1` and at `-R e_1`, two points that an equivariant
//! field cannot tell apart, certifies the asymmetry.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{curvature, radial_to_square, scalar_times, Field, OneFormJet, ScalarJet};
use crate::soliton::Soliton;

fn bump(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0; 3];
    }
    let e = (-1.0 / t).exp();
    [e, e / (t * t), e * (1.0 / t.powi(4) - 2.0 / t.powi(3))]
}

/// Smooth cutoff, 1 on `[0, 1]`, 0 on `[2, inf)`, built from `e^{-1/t}`:
/// `chi(s) = b(2 - s) / (b(2 - s) + b(s - 1))`. Returns `chi, chi', chi''`.
pub fn chi(s: f64) -> (f64, f64, f64) {
    if s <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if s >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let [a, da, dda] = bump(2.0 - s);
    let [b, db, ddb] = bump(s - 1.0);
    // d/ds of a(2 - s) flips the sign of odd derivatives
    let (a1, a2) = (-da, dda);
    let (d, d1, d2) = (a + b, a1 + db, a2 + ddb);
    let q = (a1 * d - a * d1) / (d * d);
    let q2 = (a2 * d - a * d2) / (d * d) - 2.0 * d1 * (a1 * d - a * d1) / (d * d * d);
    (a / d, q, q2)
}

/// How the cutoff argument `|4(x - R)/R|` is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffReading {
    /// `chi(4 |x - R e_1| / R)`: a ball around `R e_1`.
    Ball,
    /// `chi(4 ||x| - R| / R)`: a shell around the sphere of radius `R`.
    Shell,
}

impl CutoffReading {
    pub fn label(self) -> &'static str {
        match self {
            CutoffReading::Ball => "ball",
            CutoffReading::Shell => "shell",
        }
    }
}

/// The connection `W (1 - chi)`, i.e. `W + u0` with `u0 = -W chi`.
pub struct CutoffField {
    pub soliton: Soliton,
    pub radius: f64,
    pub reading: CutoffReading,
}

impl CutoffField {
    /// Jet of `1 - chi` at `x`.
    fn factor(&self, x: &[f64]) -> ScalarJet {
        let rr = self.radius;
        let (center, sign_free): (Vec<f64>, bool) = match self.reading {
            CutoffReading::Ball => {
                let mut c = x.to_vec();
                c[0] -= rr;
                (c, true)
            }
            CutoffReading::Shell => (x.to_vec(), false),
        };
        let r = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        // sigma(r) = 4 r / R (ball) or 4 |r - R| / R (shell)
        let (s, ds) = if sign_free {
            (4.0 * r / rr, 4.0 / rr)
        } else {
            (4.0 * (r - rr).abs() / rr, 4.0 * (r - rr).signum() / rr)
        };
        let (c, dc, ddc) = chi(s);
        let (g, dg, ddg) = (1.0 - c, -dc * ds, -ddc * ds * ds);
        let (f, df, ddf) = if dg == 0.0 && ddg == 0.0 { (g, 0.0, 0.0) } else { radial_to_square(r, g, dg, ddg) };
        ScalarJet::of_square_radius(&center, f, df, ddf)
    }
}

impl Field for CutoffField {
    fn dim(&self) -> usize {
        self.soliton.dim()
    }

    fn jet(&self, x: &[f64]) -> OneFormJet {
        let f = self.factor(x);
        let w = self.soliton.w_jet(x);
        OneFormJet::from_components((0..x.len()).map(|j| scalar_times(&f, w.comp(j))).collect())
    }

    fn label(&self) -> String {
        format!("W (1 - chi) [{}] R = {}", self.reading.label(), self.radius)
    }
}

/// One certificate evaluation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateRow {
    pub radius: f64,
    pub reading: CutoffReading,
    /// `max_{i<j} |F[i][j](R e_1)|_F`.
    pub lhs: f64,
    /// `|F[2][3](-R e_1)|_F` (one-based indices).
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// `R^2 margin`, which settles to a constant when the gap scales like `R^{-2}`.
    pub scaled_margin: f64,
    /// `sqrt(2) ((2a-1) R^2 + 2b) / (a R^2 + b)^2`.
    pub formula: f64,
    /// `|F_W[2][3](-R e_1)|_F` from the closed-form curvature minus the formula.
    pub formula_error: f64,
    pub passes: bool,
}

/// Evaluates the certificate for `W (1 - chi)` at radius `radius` in dimension `n`.
pub fn certify_nonequivariant(n: usize, radius: f64, reading: CutoffReading) -> Result<CertificateRow> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("certificate radius {radius} must be positive")));
    }
    let soliton = Soliton::new(n)?;
    let mut plus = vec![0.0; n];
    plus[0] = radius;
    let minus: Vec<f64> = plus.iter().map(|v| -v).collect();
    let field = CutoffField { soliton: soliton.clone(), radius, reading };
    let fp = curvature(&field.jet(&plus));
    let fm = curvature(&field.jet(&minus));
    let mut lhs: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            lhs = lhs.max(fp.get(i, j).norm());
        }
    }
    let rhs = fm.get(1, 2).norm();
    let formula = soliton.curvature_f23_at(radius);
    let formula_error = soliton.curvature(&minus).get(1, 2).norm() - formula;
    let margin = rhs - lhs;
    Ok(CertificateRow {
        radius,
        reading,
        lhs,
        rhs,
        margin,
        scaled_margin: radius * radius * margin,
        formula,
        formula_error,
        passes: margin > 0.0,
    })
}
