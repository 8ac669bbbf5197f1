//! TOML run configuration.
//!
//! Keys follow the model's symbol names. Every key is optional; omitted keys
//! take the bundled defaults, which are the means estimated from the
//! reference experiment. Unknown keys are rejected.
//!
//! ```toml
//! [geometry]
//! r = 30.0        # droplet radius, µm
//! L = 4.0         # cuticle thickness, µm
//! L_B = 1000.0    # leaf tissue thickness, µm
//!
//! [adjuvant]
//! kappa_A1 = 0.0676   # droplet/cuticle partition
//! kappa_B1 = 0.0676   # tissue/cuticle partition
//! lambda_A = 0.858    # µm/min
//! lambda_B = 0.858
//! beta = 0.0137       # 1/min
//! # P_A0 = 1.77e-3    # initial droplet concentration, %/µm³ (default 100/V_A)
//!
//! [active]
//! K_A1 = 1.326
//! K_B1 = 1.326
//! mu_A = 0.533
//! mu_B = 0.533
//! eta = 0.0126
//! # Q_A0 = 1.77e-3
//!
//! [diffusion]
//! D_P = 0.4       # µm²/min
//! D_Q0 = 0.4
//! alpha = 0.0
//! sigma = 3.0     # %/µm
//!
//! [solver]
//! n_cells = 40
//! dt_safety = 0.5
//! t_end = 364.0
//! output_interval = 1.0   # or output_times = [0.0, 37.0, ...]
//!
//! [estimation]
//! t_lag_min = 5.0
//! t_lag_max = 20.0
//! ```

// Field names mirror the symbols used in the configuration file.
#![allow(non_snake_case)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_geometry, CompoundParams, DiffusionModel, Geometry};
use crate::solver::SolverConfig;

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../data/default.toml");
pub const BUNDLED_DATASET_CSV: &str = include_str!("../data/reconstructed_dataset.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub r: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "L_B")]
    pub l_b: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection { r: 30.0, l: 4.0, l_b: 1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdjuvantSection {
    pub kappa_A1: f64,
    pub kappa_B1: f64,
    pub lambda_A: f64,
    pub lambda_B: f64,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub P_A0: Option<f64>,
}

impl Default for AdjuvantSection {
    fn default() -> Self {
        AdjuvantSection {
            kappa_A1: 1.0 / 14.80,
            kappa_B1: 1.0 / 14.80,
            lambda_A: 0.858,
            lambda_B: 0.858,
            beta: 1.37e-2,
            P_A0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActiveSection {
    pub K_A1: f64,
    pub K_B1: f64,
    pub mu_A: f64,
    pub mu_B: f64,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub Q_A0: Option<f64>,
}

impl Default for ActiveSection {
    fn default() -> Self {
        ActiveSection { K_A1: 1.0 / 0.754, K_B1: 1.0 / 0.754, mu_A: 0.533, mu_B: 0.533, eta: 1.26e-2, Q_A0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionSection {
    pub D_P: f64,
    pub D_Q0: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        DiffusionSection { D_P: 0.4, D_Q0: 0.4, alpha: 0.0, sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub n_cells: usize,
    pub dt_safety: f64,
    pub t_end: f64,
    /// Ignored when `output_times` is given.
    pub output_interval: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_times: Option<Vec<f64>>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { n_cells: 40, dt_safety: 0.5, t_end: 364.0, output_interval: 1.0, output_times: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationSection {
    pub t_lag_min: f64,
    pub t_lag_max: f64,
}

impl Default for EstimationSection {
    fn default() -> Self {
        EstimationSection { t_lag_min: 5.0, t_lag_max: 20.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub adjuvant: AdjuvantSection,
    pub active: ActiveSection,
    pub diffusion: DiffusionSection,
    pub solver: SolverSection,
    pub estimation: EstimationSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every derived object so that errors surface before any work.
    pub fn validate(&self) -> Result<()> {
        let g = self.geometry()?;
        self.adjuvant_params(&g)?;
        self.active_params(&g)?;
        self.diffusion_model().validate()?;
        self.solver_config()?;
        let e = &self.estimation;
        if !(e.t_lag_min > 0.0 && e.t_lag_min <= e.t_lag_max && e.t_lag_max.is_finite()) {
            return Err(Error::Config(format!(
                "estimation: need 0 < t_lag_min <= t_lag_max, got ({}, {})",
                e.t_lag_min, e.t_lag_max
            )));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        let g = &self.geometry;
        derive_geometry(g.r, g.l, g.l_b)
    }

    pub fn adjuvant_params(&self, geom: &Geometry) -> Result<CompoundParams> {
        let a = &self.adjuvant;
        let p = CompoundParams {
            diffusion: self.diffusion.D_P,
            k_in: a.kappa_A1,
            k_out: a.kappa_B1,
            s_in: a.lambda_A,
            s_out: a.lambda_B,
            loss: a.beta,
            c0: a.P_A0.unwrap_or_else(|| geom.full_droplet_concentration()),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn active_params(&self, geom: &Geometry) -> Result<CompoundParams> {
        let a = &self.active;
        let p = CompoundParams {
            diffusion: self.diffusion.D_Q0,
            k_in: a.K_A1,
            k_out: a.K_B1,
            s_in: a.mu_A,
            s_out: a.mu_B,
            loss: a.eta,
            c0: a.Q_A0.unwrap_or_else(|| geom.full_droplet_concentration()),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn diffusion_model(&self) -> DiffusionModel {
        let d = &self.diffusion;
        DiffusionModel::saturating(d.D_Q0, d.alpha, d.sigma)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig { n_cells: s.n_cells, dt_safety: s.dt_safety, ..SolverConfig::new(s.t_end) };
        match &s.output_times {
            Some(times) => cfg.output_times = times.clone(),
            None => {
                if !(s.output_interval > 0.0 && s.output_interval.is_finite()) {
                    return Err(Error::Config(format!("output_interval must be positive, got {}", s.output_interval)));
                }
                cfg = cfg.with_output_interval(s.output_interval);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_equals_defaults() {
        let cfg = RunConfig::from_toml(DEFAULT_CONFIG_TOML).unwrap();
        let d = RunConfig::default();
        assert_eq!(cfg.geometry, d.geometry);
        assert_eq!(cfg.diffusion, d.diffusion);
        assert_eq!(cfg.solver, d.solver);
        assert_eq!(cfg.estimation, d.estimation);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-3 * b.abs();
        assert!(close(cfg.adjuvant.kappa_A1, d.adjuvant.kappa_A1));
        assert!(close(cfg.active.K_A1, d.active.K_A1));
        assert_eq!(cfg.active.eta, d.active.eta);
        cfg.validate().unwrap();
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_override_and_derived_c0() {
        let cfg = RunConfig::from_toml("[diffusion]\nalpha = 1.5\n[geometry]\nL = 8.0\n").unwrap();
        assert_eq!(cfg.diffusion.alpha, 1.5);
        assert_eq!(cfg.diffusion.sigma, 3.0);
        let g = cfg.geometry().unwrap();
        assert_eq!(g.cuticle_thickness(), 8.0);
        let p = cfg.active_params(&g).unwrap();
        assert!((p.c0 - 1.77e-3).abs() < 1e-5);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_toml("[active]\nK_1A = 0.7\n").unwrap_err();
        assert!(err.to_string().contains("K_1A"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        let cfg = RunConfig::from_toml("[adjuvant]\nkappa_A1 = -1.0\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_toml("[solver]\noutput_times = [5.0, 1.0]\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::from_toml("[adjuvant]\nP_A0 = 0.002\n").unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
