//! One module per subcommand. Each returns its files and named checks; writing
//! them and the manifest is left to the caller.

mod certify;
mod flow;
mod identities;
mod kato;
mod picard;
mod spectrum;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ymflow::equivariant::{project, reduce_l, spectrum, RadialGrid, RadialProfile, ReducedOperator, Relation, SpectralBasis};
use ymflow::flow::{curvature_sup, PicardOptions, TauGrid};

use crate::config::RunConfig;
use crate::output::Outcome;
use crate::CliError;

/// The subcommands that produce data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    VerifyIdentities,
    Spectrum,
    FlowRescaled,
    FlowBlowup,
    Picard,
    CertifyNonequivariant,
    KatoFuzz,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::VerifyIdentities,
        Command::Spectrum,
        Command::FlowRescaled,
        Command::FlowBlowup,
        Command::Picard,
        Command::CertifyNonequivariant,
        Command::KatoFuzz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::Spectrum => "spectrum",
            Command::FlowRescaled => "flow-rescaled",
            Command::FlowBlowup => "flow-blowup",
            Command::Picard => "picard",
            Command::CertifyNonequivariant => "certify-nonequivariant",
            Command::KatoFuzz => "kato-fuzz",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn execute(self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        match self {
            Command::VerifyIdentities => identities::run(cfg),
            Command::Spectrum => spectrum::run(cfg),
            Command::FlowRescaled => flow::run_rescaled(cfg),
            Command::FlowBlowup => flow::run_blowup(cfg),
            Command::Picard => picard::run(cfg),
            Command::CertifyNonequivariant => certify::run(cfg),
            Command::KatoFuzz => kato::run(cfg),
        }
    }
}

/// Grid, reduced operator and the full spectral basis for a config.
pub(crate) struct Lab {
    pub grid: Arc<RadialGrid>,
    pub op: ReducedOperator,
    pub basis: SpectralBasis,
}

impl Lab {
    pub fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let grid = RadialGrid::new(cfg.n, cfg.grid_spec())?;
        let op = reduce_l(&grid)?;
        let basis = spectrum(&op, grid.len())?;
        Ok(Self { grid, op, basis })
    }

    /// `sup |F|` of `W + v` for a perturbation profile `v`.
    pub fn curvature_of_perturbation(&self, v: &[f64]) -> f64 {
        let q: Vec<f64> = v.iter().zip(&self.grid.r).map(|(x, &r)| x + self.op.soliton.profile(r)).collect();
        curvature_sup(&self.grid, &q)
    }

    /// Seeded smooth profile `e^{-r^2/2} (c0 + c1 r^2 + c2 r^4)` projected onto
    /// the positive modes and scaled to weighted norm `eps`.
    pub fn positive_data(&self, seed: u64, eps: f64) -> Result<RadialProfile, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..1.5)).collect();
        let phi = RadialProfile::from_fn(&self.grid, |r| (-r * r / 2.0).exp() * (c[0] + c[1] * r * r + c[2] * r.powi(4)));
        let pos = project(&self.basis, Relation::Gt, 0.0, &phi);
        let norm = pos.norm();
        if !(norm > 0.0) {
            return Err(CliError::Numerical(ymflow::Error::Domain("data has no positive-mode content".into())));
        }
        let s = eps / norm;
        Ok(RadialProfile { values: pos.values.iter().map(|v| v * s).collect(), ..pos })
    }

    /// Smallest positive eigenvalue whose mode carries a non-negligible share of `v`.
    pub fn leading_positive_rate(&self, v: &[f64]) -> f64 {
        let c = self.basis.coefficients(v);
        let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        (0..self.basis.len())
            .filter(|&j| self.basis.lambda[j] > 0.0 && c[j].abs() > 1e-6 * cn)
            .map(|j| self.basis.lambda[j])
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn mode_header(j: usize) -> Vec<String> {
    (1..=j).map(|k| format!("mode_{k}")).collect()
}

pub(crate) fn picard_options(cfg: &RunConfig) -> Result<PicardOptions, CliError> {
    Ok(PicardOptions {
        tau: TauGrid::layered(cfg.picard_tau_end_tau, cfg.picard_spacing_tau, 1e-5, 0.25)?,
        tol: cfg.picard_tol_rel,
        ..PicardOptions::standard()
    })
}
