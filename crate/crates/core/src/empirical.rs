//! Literature correlations for partition and diffusion coefficients.
//!
//! These give a first guess from log Pow and the McGowan volume only. Fed into
//! the uptake model they leave nearly everything stuck in the cuticle, so the
//! bundled configuration does not use them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// µm²/min per m²/s.
pub const M2S_TO_UM2MIN: f64 = 6.0e13;

/// Wax/water partition coefficient from log Pow.
pub fn partition_wax_water(log_pow: f64) -> Result<f64> {
    finite(log_pow, "log Pow")?;
    Ok(10f64.powf(log_pow - 1.0))
}

/// Cuticle/water partition coefficient from log Pow.
pub fn partition_cuticle_water(log_pow: f64) -> Result<f64> {
    finite(log_pow, "log Pow")?;
    Ok(10f64.powf(-0.77 + 0.98 * log_pow))
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite, got {v}")))
    }
}

/// Which diffusion correlation to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// Adjuvant in the cuticle.
    Adjuvant,
    /// Active ingredient in isolated wax.
    ActiveWax,
    /// Active ingredient in the whole cuticle.
    ActiveCuticle,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Adjuvant, Relation::ActiveWax, Relation::ActiveCuticle];

    pub fn token(&self) -> &'static str {
        match self {
            Relation::Adjuvant => "AJ",
            Relation::ActiveWax => "AI_wax",
            Relation::ActiveCuticle => "AI_cuticle",
        }
    }

    fn coefficients(&self) -> (f64, f64) {
        match self {
            Relation::Adjuvant => (-12.49, 0.015),
            Relation::ActiveWax => (-15.26, 0.01),
            Relation::ActiveCuticle => (-13.0, 0.01),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Relation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Relation::ALL.into_iter().find(|r| r.token() == s).ok_or_else(|| {
            Error::domain(format!("unknown diffusion relation `{s}` (expected AJ, AI_wax or AI_cuticle)"))
        })
    }
}

/// Diffusion coefficient in m²/s from the McGowan volume (cm³/mol).
pub fn diffusion_from_mcgowan(mv: f64, relation: Relation) -> Result<f64> {
    if !(mv > 0.0 && mv.is_finite()) {
        return Err(Error::domain(format!("McGowan volume must be positive, got {mv}")));
    }
    let (a, b) = relation.coefficients();
    Ok(10f64.powf(a - b * mv))
}

pub fn convert_m2s_to_um2min(d: f64) -> f64 {
    d * M2S_TO_UM2MIN
}

/// One line of the derived-coefficient table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRow {
    pub quantity: String,
    pub input: f64,
    pub value: f64,
    pub unit: &'static str,
}

/// Every coefficient derivable from the given inputs, diffusion values in both
/// unit systems.
pub fn derived_table(log_pow: Option<f64>, mcgowan: Option<f64>) -> Result<Vec<EmpiricalRow>> {
    let mut rows = Vec::new();
    if let Some(lp) = log_pow {
        rows.push(EmpiricalRow {
            quantity: "partition_wax_water".into(),
            input: lp,
            value: partition_wax_water(lp)?,
            unit: "1",
        });
        rows.push(EmpiricalRow {
            quantity: "partition_cuticle_water".into(),
            input: lp,
            value: partition_cuticle_water(lp)?,
            unit: "1",
        });
    }
    if let Some(mv) = mcgowan {
        for rel in Relation::ALL {
            let d = diffusion_from_mcgowan(mv, rel)?;
            rows.push(EmpiricalRow { quantity: format!("diffusion_{rel}"), input: mv, value: d, unit: "m^2/s" });
            rows.push(EmpiricalRow {
                quantity: format!("diffusion_{rel}"),
                input: mv,
                value: convert_m2s_to_um2min(d),
                unit: "um^2/min",
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        ((a - b) / b).abs() <= tol
    }

    #[test]
    fn partition_table_values() {
        assert!(rel_close(partition_wax_water(3.90).unwrap(), 797.33, 0.01));
        assert!(rel_close(partition_cuticle_water(3.90).unwrap(), 1127.20, 0.01));
        assert!(rel_close(partition_wax_water(3.19).unwrap(), 154.88, 0.01));
        assert!(rel_close(partition_cuticle_water(3.19).unwrap(), 227.09, 0.01));
        assert_eq!(partition_wax_water(1.0).unwrap(), 1.0);
        assert!((partition_cuticle_water(0.77 / 0.98).unwrap() - 1.0).abs() < 1e-14);
        assert!(partition_wax_water(f64::NAN).is_err());
    }

    #[test]
    fn diffusion_table_values() {
        let aj = diffusion_from_mcgowan(272.42, Relation::Adjuvant).unwrap();
        let wax = diffusion_from_mcgowan(319.99, Relation::ActiveWax).unwrap();
        let cut = diffusion_from_mcgowan(319.99, Relation::ActiveCuticle).unwrap();
        assert!(rel_close(aj, 2.65e-17, 0.01));
        assert!(rel_close(wax, 3.47e-19, 0.01));
        assert!(rel_close(cut, 6.31e-17, 0.01));
        assert!(rel_close(convert_m2s_to_um2min(aj), 1.59e-3, 0.01));
        assert!(rel_close(convert_m2s_to_um2min(wax), 2.08e-5, 0.01));
        assert!(rel_close(convert_m2s_to_um2min(cut), 3.79e-3, 0.01));
        assert_eq!(convert_m2s_to_um2min(0.0), 0.0);
    }

    #[test]
    fn relation_tags() {
        for r in Relation::ALL {
            assert_eq!(r.token().parse::<Relation>().unwrap(), r);
        }
        assert!("AI".parse::<Relation>().is_err());
        assert!(diffusion_from_mcgowan(0.0, Relation::Adjuvant).is_err());
    }

    #[test]
    fn table_lists_both_unit_systems() {
        let rows = derived_table(Some(3.19), Some(319.99)).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(derived_table(None, None).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn conversion_round_trip(d in 1e-25f64..1e-5) {
            // Multiply-then-divide is exact up to one rounding step.
            let back = convert_m2s_to_um2min(d) / M2S_TO_UM2MIN;
            prop_assert!((back - d).abs() <= f64::EPSILON * d, "{back} vs {d}");
        }

        #[test]
        fn monotone(x in -5.0f64..8.0, dx in 0.01f64..2.0, mv in 1.0f64..800.0) {
            prop_assert!(partition_wax_water(x + dx).unwrap() > partition_wax_water(x).unwrap());
            prop_assert!(partition_cuticle_water(x + dx).unwrap() > partition_cuticle_water(x).unwrap());
            for r in Relation::ALL {
                prop_assert!(diffusion_from_mcgowan(mv + dx, r).unwrap() < diffusion_from_mcgowan(mv, r).unwrap());
            }
        }
    }
}
