//! Flat `key = value` run configuration.
//!
//! Key suffixes carry units: `_y` is a length in similarity coordinates, `_tau`
//! similarity time, `_s` the rescaled clock of physical runs, `_rho` a weighted
//! L^2 norm, `_rel` and `_abs` relative and absolute tolerances, `_count` a count,
//! `_ratio` a dimensionless ratio. Unknown keys are rejected.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use ymflow::analysis::CutoffReading;
use ymflow::equivariant::GridSpec;

use crate::CliError;

/// Initial data of `flow-rescaled`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowData {
    /// Initial slice of the fixed point built from positive data; the unstable
    /// modes are corrected so the run converges to the soliton.
    Picard,
    /// Seeded smooth profile projected onto the positive modes, uncorrected.
    Positive,
    /// The time-translation eigenfunction.
    GMode,
}

/// Field sampled by `kato-fuzz`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KatoField {
    Soliton,
    Mixture,
}

/// Cutoff readings evaluated by `certify-nonequivariant`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadingChoice {
    Ball,
    Shell,
    Both,
}

impl ReadingChoice {
    pub fn readings(self) -> Vec<CutoffReading> {
        match self {
            ReadingChoice::Ball => vec![CutoffReading::Ball],
            ReadingChoice::Shell => vec![CutoffReading::Shell],
            ReadingChoice::Both => vec![CutoffReading::Ball, CutoffReading::Shell],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    pub output_dir: String,
    pub grid_elements_count: usize,
    pub grid_degree_count: usize,
    pub grid_r_max_y: f64,
    pub grid_stretch_ratio: f64,
    pub spectral_modes_count: usize,
    pub growth_r_fit_y: f64,
    pub flow_data: FlowData,
    pub flow_eps_rho: f64,
    pub flow_tau_end_tau: f64,
    pub flow_sample_dt_tau: f64,
    pub flow_fit_start_tau: f64,
    pub flow_rtol_rel: f64,
    pub flow_atol_abs: f64,
    pub blowup_eps_rho: f64,
    pub blowup_s_max_s: f64,
    pub blowup_sample_ds_s: f64,
    pub blowup_t_stop_abs: f64,
    pub blowup_check_until_abs: f64,
    pub blowup_curvature_cap_abs: f64,
    pub picard_eps_list_rho: Vec<f64>,
    pub picard_tau_end_tau: f64,
    pub picard_spacing_tau: f64,
    pub picard_tol_rel: f64,
    pub picard_reevolve_tau: f64,
    pub certificate_radii_y: Vec<f64>,
    pub certificate_formula_radii_y: Vec<f64>,
    pub certificate_reading: ReadingChoice,
    pub kato_field: KatoField,
    pub kato_samples_count: usize,
    pub kato_radius_y: f64,
    pub kato_step_y: f64,
    pub matrix_samples_count: usize,
    pub identities_points_count: usize,
    pub identities_radius_y: f64,
    pub identities_corrupt_a_abs: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 5,
            seed: 0,
            output_dir: "ymflow-out".into(),
            grid_elements_count: 32,
            grid_degree_count: 12,
            grid_r_max_y: 16.0,
            grid_stretch_ratio: 1.0,
            spectral_modes_count: 8,
            growth_r_fit_y: 80.0,
            flow_data: FlowData::Picard,
            flow_eps_rho: 1e-2,
            flow_tau_end_tau: 8.0,
            flow_sample_dt_tau: 0.25,
            flow_fit_start_tau: 3.0,
            flow_rtol_rel: 1e-10,
            flow_atol_abs: 1e-16,
            blowup_eps_rho: 0.0,
            blowup_s_max_s: 40.0,
            blowup_sample_ds_s: 0.25,
            blowup_t_stop_abs: 1e-5,
            blowup_check_until_abs: 1e-4,
            blowup_curvature_cap_abs: 1e10,
            picard_eps_list_rho: vec![1e-2, 3e-3, 1e-3],
            picard_tau_end_tau: 16.0,
            picard_spacing_tau: 1.0 / 128.0,
            picard_tol_rel: 1e-13,
            picard_reevolve_tau: 8.0,
            certificate_radii_y: vec![10.0, 20.0, 40.0],
            certificate_formula_radii_y: vec![5.0, 10.0, 50.0],
            certificate_reading: ReadingChoice::Both,
            kato_field: KatoField::Soliton,
            kato_samples_count: 1000,
            kato_radius_y: 5.0,
            kato_step_y: 1e-2,
            matrix_samples_count: 100_000,
            identities_points_count: 100,
            identities_radius_y: 10.0,
            identities_corrupt_a_abs: 0.0,
        }
    }
}

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Config(format!("{key} = {value}: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, "not a number of the expected kind"))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = value.split(',').map(|s| num(key, s.trim())).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(bad(key, value, "empty list"));
    }
    Ok(v)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses a config file on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg = Self::from_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the keys of a config file to the defaults without validating, so
    /// that further overrides can follow.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "n" => self.n = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "output_dir" => self.output_dir = value.to_string(),
            "grid_elements_count" => self.grid_elements_count = num(key, value)?,
            "grid_degree_count" => self.grid_degree_count = num(key, value)?,
            "grid_r_max_y" => self.grid_r_max_y = num(key, value)?,
            "grid_stretch_ratio" => self.grid_stretch_ratio = num(key, value)?,
            "spectral_modes_count" => self.spectral_modes_count = num(key, value)?,
            "growth_r_fit_y" => self.growth_r_fit_y = num(key, value)?,
            "flow_data" => {
                self.flow_data = match value {
                    "picard" => FlowData::Picard,
                    "positive" => FlowData::Positive,
                    "g_mode" => FlowData::GMode,
                    _ => return Err(bad(key, value, "expected picard, positive or g_mode")),
                }
            }
            "flow_eps_rho" => self.flow_eps_rho = num(key, value)?,
            "flow_tau_end_tau" => self.flow_tau_end_tau = num(key, value)?,
            "flow_sample_dt_tau" => self.flow_sample_dt_tau = num(key, value)?,
            "flow_fit_start_tau" => self.flow_fit_start_tau = num(key, value)?,
            "flow_rtol_rel" => self.flow_rtol_rel = num(key, value)?,
            "flow_atol_abs" => self.flow_atol_abs = num(key, value)?,
            "blowup_eps_rho" => self.blowup_eps_rho = num(key, value)?,
            "blowup_s_max_s" => self.blowup_s_max_s = num(key, value)?,
            "blowup_sample_ds_s" => self.blowup_sample_ds_s = num(key, value)?,
            "blowup_t_stop_abs" => self.blowup_t_stop_abs = num(key, value)?,
            "blowup_check_until_abs" => self.blowup_check_until_abs = num(key, value)?,
            "blowup_curvature_cap_abs" => self.blowup_curvature_cap_abs = num(key, value)?,
            "picard_eps_list_rho" => self.picard_eps_list_rho = list(key, value)?,
            "picard_tau_end_tau" => self.picard_tau_end_tau = num(key, value)?,
            "picard_spacing_tau" => self.picard_spacing_tau = num(key, value)?,
            "picard_tol_rel" => self.picard_tol_rel = num(key, value)?,
            "picard_reevolve_tau" => self.picard_reevolve_tau = num(key, value)?,
            "certificate_radii_y" => self.certificate_radii_y = list(key, value)?,
            "certificate_formula_radii_y" => self.certificate_formula_radii_y = list(key, value)?,
            "certificate_reading" => {
                self.certificate_reading = match value {
                    "ball" => ReadingChoice::Ball,
                    "shell" => ReadingChoice::Shell,
                    "both" => ReadingChoice::Both,
                    _ => return Err(bad(key, value, "expected ball, shell or both")),
                }
            }
            "kato_field" => {
                self.kato_field = match value {
                    "soliton" => KatoField::Soliton,
                    "mixture" => KatoField::Mixture,
                    _ => return Err(bad(key, value, "expected soliton or mixture")),
                }
            }
            "kato_samples_count" => self.kato_samples_count = num(key, value)?,
            "kato_radius_y" => self.kato_radius_y = num(key, value)?,
            "kato_step_y" => self.kato_step_y = num(key, value)?,
            "matrix_samples_count" => self.matrix_samples_count = num(key, value)?,
            "identities_points_count" => self.identities_points_count = num(key, value)?,
            "identities_radius_y" => self.identities_radius_y = num(key, value)?,
            "identities_corrupt_a_abs" => self.identities_corrupt_a_abs = num(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            elements: self.grid_elements_count,
            degree: self.grid_degree_count,
            r_max: self.grid_r_max_y,
            stretch: self.grid_stretch_ratio,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if !ymflow::DIM_RANGE.contains(&self.n) {
            return fail(format!("n = {} outside 5..=9", self.n));
        }
        let spec = self.grid_spec();
        if spec.node_count() < 64 {
            return fail(format!("grid has {} nodes; at least 64 are required", spec.node_count()));
        }
        if !(8.0..=30.0).contains(&self.grid_r_max_y) {
            return fail(format!("grid_r_max_y = {} outside [8, 30]", self.grid_r_max_y));
        }
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.spectral_modes_count == 0 || self.spectral_modes_count > spec.node_count() {
            return fail(format!("spectral_modes_count = {} outside 1..={}", self.spectral_modes_count, spec.node_count()));
        }
        if self.growth_r_fit_y < self.grid_r_max_y {
            return fail("growth_r_fit_y must not be inside the grid".into());
        }
        let positive = [
            ("flow_eps_rho", self.flow_eps_rho),
            ("flow_tau_end_tau", self.flow_tau_end_tau),
            ("flow_sample_dt_tau", self.flow_sample_dt_tau),
            ("flow_rtol_rel", self.flow_rtol_rel),
            ("flow_atol_abs", self.flow_atol_abs),
            ("blowup_s_max_s", self.blowup_s_max_s),
            ("blowup_sample_ds_s", self.blowup_sample_ds_s),
            ("blowup_t_stop_abs", self.blowup_t_stop_abs),
            ("blowup_check_until_abs", self.blowup_check_until_abs),
            ("blowup_curvature_cap_abs", self.blowup_curvature_cap_abs),
            ("picard_tau_end_tau", self.picard_tau_end_tau),
            ("picard_spacing_tau", self.picard_spacing_tau),
            ("picard_tol_rel", self.picard_tol_rel),
            ("picard_reevolve_tau", self.picard_reevolve_tau),
            ("kato_radius_y", self.kato_radius_y),
            ("kato_step_y", self.kato_step_y),
            ("identities_radius_y", self.identities_radius_y),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{k} = {v} must be positive"));
            }
        }
        if !(self.blowup_eps_rho >= 0.0) || !(self.identities_corrupt_a_abs.is_finite()) {
            return fail("blowup_eps_rho must be nonnegative and identities_corrupt_a_abs finite".into());
        }
        if !(0.0..self.flow_tau_end_tau).contains(&self.flow_fit_start_tau) {
            return fail("flow_fit_start_tau must lie in [0, flow_tau_end_tau)".into());
        }
        if self.picard_reevolve_tau > self.picard_tau_end_tau {
            return fail("picard_reevolve_tau exceeds picard_tau_end_tau".into());
        }
        for (k, v) in [
            ("picard_eps_list_rho", &self.picard_eps_list_rho),
            ("certificate_radii_y", &self.certificate_radii_y),
            ("certificate_formula_radii_y", &self.certificate_formula_radii_y),
        ] {
            if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return fail(format!("{k} entries must be positive"));
            }
        }
        for (k, v) in [
            ("kato_samples_count", self.kato_samples_count),
            ("matrix_samples_count", self.matrix_samples_count),
            ("identities_points_count", self.identities_points_count),
        ] {
            if v == 0 {
                return fail(format!("{k} must be positive"));
            }
        }
        Ok(())
    }

    /// Canonical text of every key except `output_dir`, sorted by key. Parsing
    /// it reproduces the configuration.
    pub fn canonical(&self) -> String {
        let mut e: Vec<(&str, String)> = vec![
            ("n", self.n.to_string()),
            ("seed", self.seed.to_string()),
            ("grid_elements_count", self.grid_elements_count.to_string()),
            ("grid_degree_count", self.grid_degree_count.to_string()),
            ("grid_r_max_y", self.grid_r_max_y.to_string()),
            ("grid_stretch_ratio", self.grid_stretch_ratio.to_string()),
            ("spectral_modes_count", self.spectral_modes_count.to_string()),
            ("growth_r_fit_y", self.growth_r_fit_y.to_string()),
            (
                "flow_data",
                match self.flow_data {
                    FlowData::Picard => "picard",
                    FlowData::Positive => "positive",
                    FlowData::GMode => "g_mode",
                }
                .into(),
            ),
            ("flow_eps_rho", self.flow_eps_rho.to_string()),
            ("flow_tau_end_tau", self.flow_tau_end_tau.to_string()),
            ("flow_sample_dt_tau", self.flow_sample_dt_tau.to_string()),
            ("flow_fit_start_tau", self.flow_fit_start_tau.to_string()),
            ("flow_rtol_rel", self.flow_rtol_rel.to_string()),
            ("flow_atol_abs", self.flow_atol_abs.to_string()),
            ("blowup_eps_rho", self.blowup_eps_rho.to_string()),
            ("blowup_s_max_s", self.blowup_s_max_s.to_string()),
            ("blowup_sample_ds_s", self.blowup_sample_ds_s.to_string()),
            ("blowup_t_stop_abs", self.blowup_t_stop_abs.to_string()),
            ("blowup_check_until_abs", self.blowup_check_until_abs.to_string()),
            ("blowup_curvature_cap_abs", self.blowup_curvature_cap_abs.to_string()),
            ("picard_eps_list_rho", join(&self.picard_eps_list_rho)),
            ("picard_tau_end_tau", self.picard_tau_end_tau.to_string()),
            ("picard_spacing_tau", self.picard_spacing_tau.to_string()),
            ("picard_tol_rel", self.picard_tol_rel.to_string()),
            ("picard_reevolve_tau", self.picard_reevolve_tau.to_string()),
            ("certificate_radii_y", join(&self.certificate_radii_y)),
            ("certificate_formula_radii_y", join(&self.certificate_formula_radii_y)),
            (
                "certificate_reading",
                match self.certificate_reading {
                    ReadingChoice::Ball => "ball",
                    ReadingChoice::Shell => "shell",
                    ReadingChoice::Both => "both",
                }
                .into(),
            ),
            (
                "kato_field",
                match self.kato_field {
                    KatoField::Soliton => "soliton",
                    KatoField::Mixture => "mixture",
                }
                .into(),
            ),
            ("kato_samples_count", self.kato_samples_count.to_string()),
            ("kato_radius_y", self.kato_radius_y.to_string()),
            ("kato_step_y", self.kato_step_y.to_string()),
            ("matrix_samples_count", self.matrix_samples_count.to_string()),
            ("identities_points_count", self.identities_points_count.to_string()),
            ("identities_radius_y", self.identities_radius_y.to_string()),
            ("identities_corrupt_a_abs", self.identities_corrupt_a_abs.to_string()),
        ];
        e.sort_by(|a, b| a.0.cmp(b.0));
        let mut s = String::new();
        for (k, v) in e {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
