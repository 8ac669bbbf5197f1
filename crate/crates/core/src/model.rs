//! Domain types shared by every other module.
//!
//! Units throughout: lengths in µm, time in minutes, amounts in percent of the
//! initial total. Compartment concentrations are `% µm⁻³`; the membrane state is
//! an amount density along the cuticle depth, `% µm⁻¹`, so that integrating it
//! over `[0, L]` yields a percentage.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Droplet, cuticle and leaf-tissue dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    radius: f64,
    cuticle_thickness: f64,
    tissue_thickness: f64,
    droplet_volume: f64,
    contact_area: f64,
    tissue_volume: f64,
}

/// Builds the geometry of a hemispherical droplet of radius `r` sitting on a
/// cuticle of thickness `l` above a tissue slab of thickness `l_b`.
pub fn derive_geometry(r: f64, l: f64, l_b: f64) -> Result<Geometry> {
    for (name, v) in [("r", r), ("L", l), ("L_B", l_b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let droplet_volume = 2.0 / 3.0 * PI * r.powi(3);
    let contact_area = PI * r * r;
    Ok(Geometry {
        radius: r,
        cuticle_thickness: l,
        tissue_thickness: l_b,
        droplet_volume,
        contact_area,
        tissue_volume: contact_area * l_b,
    })
}

impl Geometry {
    /// Geometry with every quantity given explicitly. `radius` and
    /// `tissue_thickness` are kept for reporting only.
    pub fn from_parts(
        radius: f64,
        cuticle_thickness: f64,
        tissue_thickness: f64,
        droplet_volume: f64,
        contact_area: f64,
        tissue_volume: f64,
    ) -> Result<Self> {
        let g = Geometry { radius, cuticle_thickness, tissue_thickness, droplet_volume, contact_area, tissue_volume };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            ("r", self.radius),
            ("L", self.cuticle_thickness),
            ("L_B", self.tissue_thickness),
            ("V_A", self.droplet_volume),
            ("A", self.contact_area),
            ("V_B", self.tissue_volume),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("geometry field {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
    /// Cuticle thickness `L` (µm).
    pub fn cuticle_thickness(&self) -> f64 {
        self.cuticle_thickness
    }
    pub fn tissue_thickness(&self) -> f64 {
        self.tissue_thickness
    }
    /// Droplet volume `V_A` (µm³).
    pub fn droplet_volume(&self) -> f64 {
        self.droplet_volume
    }
    /// Droplet/cuticle contact area `A` (µm²).
    pub fn contact_area(&self) -> f64 {
        self.contact_area
    }
    /// Leaf-tissue volume `V_B` (µm³).
    pub fn tissue_volume(&self) -> f64 {
        self.tissue_volume
    }

    /// Same geometry over a different contact area. The layers are laterally
    /// homogeneous, so droplet and tissue volumes scale with the area.
    pub fn with_contact_area(&self, area: f64) -> Result<Self> {
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::domain(format!("contact area must be positive, got {area}")));
        }
        let scale = area / self.contact_area;
        let g = Geometry {
            contact_area: area,
            droplet_volume: self.droplet_volume * scale,
            tissue_volume: self.tissue_volume * scale,
            ..*self
        };
        g.validate()?;
        Ok(g)
    }

    /// Same geometry with a different cuticle thickness.
    pub fn with_cuticle_thickness(&self, l: f64) -> Result<Self> {
        let g = Geometry { cuticle_thickness: l, ..*self };
        g.validate()?;
        Ok(g)
    }

    /// Initial droplet concentration that puts exactly 100 % in the droplet.
    pub fn full_droplet_concentration(&self) -> f64 {
        100.0 / self.droplet_volume
    }
}

/// Transport constants of one compound.
///
/// `k_in` and `k_out` are the compartment-over-cuticle partition factors
/// (`κ_{A,1}`, `κ_{B,1}` for the adjuvant); they are the reciprocals of the
/// cuticle-over-water ratios that equilibrium measurements produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundParams {
    /// Baseline diffusion coefficient in the cuticle (µm²/min).
    pub diffusion: f64,
    pub k_in: f64,
    pub k_out: f64,
    /// Boundary speed at the droplet side (µm/min). Zero seals the boundary.
    pub s_in: f64,
    /// Boundary speed at the tissue side (µm/min).
    pub s_out: f64,
    /// Transfer rate from tissue to the rest of the plant (1/min).
    pub loss: f64,
    /// Initial droplet concentration (% µm⁻³).
    pub c0: f64,
}

impl CompoundParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("D", self.diffusion), ("k_in", self.k_in), ("k_out", self.k_out)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [("s_in", self.s_in), ("s_out", self.s_out), ("loss", self.loss), ("c0", self.c0)];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Sets both partition factors from a cuticle-over-water ratio, the
    /// equal-partition convention used when droplet and tissue are both aqueous.
    pub fn with_cuticle_ratio(mut self, cuticle_over_water: f64) -> Self {
        self.k_in = 1.0 / cuticle_over_water;
        self.k_out = 1.0 / cuticle_over_water;
        self
    }
}

/// Cuticle diffusion coefficient as a function of local adjuvant density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionModel {
    Constant {
        d0: f64,
    },
    /// `d0 · (1 + alpha·m / (sigma + m))`
    Saturating {
        d0: f64,
        alpha: f64,
        sigma: f64,
    },
}

impl DiffusionModel {
    pub fn constant(d0: f64) -> Self {
        DiffusionModel::Constant { d0 }
    }

    pub fn saturating(d0: f64, alpha: f64, sigma: f64) -> Self {
        DiffusionModel::Saturating { d0, alpha, sigma }
    }

    pub fn validate(&self) -> Result<()> {
        let d0 = self.baseline();
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(Error::domain(format!("D0 must be positive, got {d0}")));
        }
        if let DiffusionModel::Saturating { alpha, sigma, .. } = *self {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::domain(format!("alpha must be non-negative, got {alpha}")));
            }
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
            }
        }
        Ok(())
    }

    pub fn baseline(&self) -> f64 {
        match *self {
            DiffusionModel::Constant { d0 } | DiffusionModel::Saturating { d0, .. } => d0,
        }
    }

    /// Supremum of the coefficient over all adjuvant densities.
    pub fn upper_bound(&self) -> f64 {
        match *self {
            DiffusionModel::Constant { d0 } => d0,
            DiffusionModel::Saturating { d0, alpha, .. } => d0 * (1.0 + alpha),
        }
    }

    /// True when the coefficient does not depend on the adjuvant at all.
    pub fn is_inert(&self) -> bool {
        match *self {
            DiffusionModel::Constant { .. } => true,
            DiffusionModel::Saturating { alpha, .. } => alpha == 0.0,
        }
    }

    pub(crate) fn eval_unchecked(&self, m_local: f64) -> f64 {
        match *self {
            DiffusionModel::Constant { d0 } => d0,
            DiffusionModel::Saturating { d0, alpha, sigma } => d0 * (1.0 + alpha * m_local / (sigma + m_local)),
        }
    }
}

/// Evaluates the diffusion coefficient at adjuvant density `m_local`.
/// Callers clamp roundoff negatives to zero first.
pub fn eval_diffusion(model: &DiffusionModel, m_local: f64) -> Result<f64> {
    if m_local.is_nan() || m_local < 0.0 {
        return Err(Error::domain(format!("adjuvant density must be non-negative, got {m_local}")));
    }
    if m_local.is_infinite() {
        return Ok(model.upper_bound());
    }
    Ok(model.eval_unchecked(m_local))
}

/// State of one compound at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Droplet concentration (% µm⁻³).
    pub c_drop: f64,
    /// Nodal membrane amount density on the cuticle mesh (% µm⁻¹).
    pub m: Vec<f64>,
    /// Leaf-tissue concentration (% µm⁻³).
    pub c_leaf: f64,
    /// Cumulative amount moved to the rest of the plant (%).
    pub lost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Compound {
    #[serde(rename = "AJ")]
    Adjuvant,
    #[serde(rename = "AI")]
    Active,
}

impl Compound {
    pub const ALL: [Compound; 2] = [Compound::Adjuvant, Compound::Active];

    pub fn token(&self) -> &'static str {
        match self {
            Compound::Adjuvant => "AJ",
            Compound::Active => "AI",
        }
    }
}

impl fmt::Display for Compound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Compound {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AJ" => Ok(Compound::Adjuvant),
            "AI" => Ok(Compound::Active),
            other => Err(Error::Dataset(format!("unknown compound token `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compartment {
    Droplet,
    Cuticle,
    LeafTissue,
    Rest,
}

impl Compartment {
    pub const ALL: [Compartment; 4] =
        [Compartment::Droplet, Compartment::Cuticle, Compartment::LeafTissue, Compartment::Rest];

    pub fn token(&self) -> &'static str {
        match self {
            Compartment::Droplet => "droplet",
            Compartment::Cuticle => "cuticle",
            Compartment::LeafTissue => "leaf_tissue",
            Compartment::Rest => "rest",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Compartment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "droplet" => Ok(Compartment::Droplet),
            "cuticle" => Ok(Compartment::Cuticle),
            "leaf_tissue" | "leaf" => Ok(Compartment::LeafTissue),
            "rest" => Ok(Compartment::Rest),
            other => Err(Error::Dataset(format!("unknown compartment token `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn table_geometry() {
        let g = derive_geometry(30.0, 4.0, 1000.0).unwrap();
        assert!(rel(g.droplet_volume(), 5.65e4) < 1e-3, "{}", g.droplet_volume());
        assert!(rel(g.contact_area(), 2.83e3) < 1e-3, "{}", g.contact_area());
        assert!(rel(g.tissue_volume(), 2.83e6) < 1e-3, "{}", g.tissue_volume());
    }

    #[test]
    fn unit_geometry_closed_forms() {
        let g = derive_geometry(1.0, 1.0, 1.0).unwrap();
        assert!(rel(g.droplet_volume(), 2.0 * PI / 3.0) < 1e-9);
        assert!(rel(g.contact_area(), PI) < 1e-9);
        assert!(rel(g.tissue_volume(), PI) < 1e-9);
    }

    #[test]
    fn vanishing_radius() {
        let g = derive_geometry(1e-9, 4.0, 1000.0).unwrap();
        assert!(g.droplet_volume() < 1e-25);
        assert!(g.contact_area() < 1e-17);
    }

    #[test]
    fn rejects_non_positive_dimensions() {
        assert!(matches!(derive_geometry(0.0, 4.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(derive_geometry(1.0, -4.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(derive_geometry(1.0, 4.0, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn saturating_law_values() {
        let m = DiffusionModel::saturating(0.4, 1.5, 3.0);
        assert_eq!(eval_diffusion(&m, 0.0).unwrap(), 0.4);
        assert!((eval_diffusion(&m, 3.0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(eval_diffusion(&m, f64::INFINITY).unwrap(), 1.0);
        assert!((eval_diffusion(&m, 1e12).unwrap() - 1.0).abs() < 1e-10);
        assert!(eval_diffusion(&m, -1e-15).is_err());
        assert_eq!(eval_diffusion(&DiffusionModel::constant(0.4), 17.0).unwrap(), 0.4);
    }

    #[test]
    fn partition_reciprocal_convention() {
        let p = CompoundParams { diffusion: 0.4, k_in: 1.0, k_out: 1.0, s_in: 0.858, s_out: 0.858, loss: 0.0, c0: 1.0 }
            .with_cuticle_ratio(14.80);
        assert_eq!(p.k_in, 1.0 / 14.80);
        assert!((p.k_in * 14.80 - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn saturating_is_monotone_and_bounded(
            d0 in 1e-3f64..10.0, alpha in 0.0f64..5.0, sigma in 1e-2f64..10.0,
            mut grid in proptest::collection::vec(0.0f64..1e3, 2..40),
        ) {
            let model = DiffusionModel::saturating(d0, alpha, sigma);
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut prev = f64::NEG_INFINITY;
            for m in grid {
                let d = eval_diffusion(&model, m).unwrap();
                prop_assert!(d >= prev);
                prop_assert!(d >= d0 && d <= d0 * (1.0 + alpha));
                prev = d;
            }
        }

        #[test]
        fn tissue_volume_is_area_times_thickness(r in 1e-2f64..1e3, l in 1e-2f64..1e2, lb in 1e-2f64..1e4) {
            let g = derive_geometry(r, l, lb).unwrap();
            prop_assert_eq!(g.tissue_volume(), g.contact_area() * lb);
        }
    }
}
