//! Inequality suites, the weight `r~` and weighted parabolic norms, eigenfunction
//! growth fits, and the curvature certificate for non-equivariant data.

mod certificate;
mod growth;
mod inequalities;
mod norms;

pub use certificate::{certify_nonequivariant, chi, CertificateRow, CutoffField, CutoffReading};
pub use growth::{closed_form_slope, continue_inward, growth_check, log_log_slope, GrowthReport};
pub use inequalities::{
    check_ecker, check_kato, check_matrix_inequality, fuzz_kato, fuzz_matrix_inequality, kato_survey, EckerSample, FuzzReport,
    GaussianBump, KatoSample, MixtureField,
};
pub use norms::{
    rtilde, star_norm, zeta, Combination, EquivariantSeries, NormParams, NormReport, RadialWeightField, Separable,
    SpacetimeField, StarOptions,
};
