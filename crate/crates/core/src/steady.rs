//! Closed-form equilibrium of the conservative system (no loss to the rest of
//! the plant).
//!
//! Setting every rate to zero forces partition equilibrium at both faces of the
//! cuticle and a flat membrane profile:
//!
//! ```text
//! c_drop = k_in·V_A·c0 / (k_in·V_A + k_out·V_B + A·L)
//! m      = A·c_drop / k_in
//! c_leaf = (k_out / k_in)·c_drop
//! ```

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{CompoundParams, Geometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub c_drop: f64,
    /// Spatially constant membrane density (% µm⁻¹).
    pub m_uniform: f64,
    pub c_leaf: f64,
    pub pct_drop: f64,
    pub pct_cuticle: f64,
    pub pct_leaf: f64,
}

pub fn steady_state(geom: &Geometry, params: &CompoundParams) -> Result<SteadyState> {
    params.validate()?;
    if params.loss != 0.0 {
        return Err(Error::Precondition(format!(
            "steady state requires zero loss rate (got {}); with loss everything ends in the rest of the plant",
            params.loss
        )));
    }
    let w_drop = params.k_in * geom.droplet_volume();
    let w_cut = geom.contact_area() * geom.cuticle_thickness();
    let w_leaf = params.k_out * geom.tissue_volume();
    let denom = w_drop + w_leaf + w_cut;

    let c_drop = w_drop * params.c0 / denom;
    let m_uniform = geom.contact_area() * c_drop / params.k_in;
    let c_leaf = params.k_out / params.k_in * c_drop;

    // Percentages from the capacity weights directly, so they are defined even
    // for an empty droplet.
    Ok(SteadyState {
        c_drop,
        m_uniform,
        c_leaf,
        pct_drop: 100.0 * w_drop / denom,
        pct_cuticle: 100.0 * w_cut / denom,
        pct_leaf: 100.0 * w_leaf / denom,
    })
}

/// Quantity varied in a steady-state sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Cuticle-over-water ratio `K_{1,A}`; both partition factors follow as
    /// its reciprocal.
    Partition,
    /// Contact area; droplet and tissue volumes scale with it.
    Area,
    /// Cuticle thickness.
    Length,
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" | "K" | "K_1A" | "partition" => Ok(SweepVariable::Partition),
            "A" | "area" => Ok(SweepVariable::Area),
            "L" | "length" => Ok(SweepVariable::Length),
            other => Err(Error::Config(format!("unknown sweep variable `{other}` (expected k, A or L)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyRow {
    pub value: f64,
    pub pct_drop: f64,
    pub pct_cuticle: f64,
    pub pct_leaf: f64,
}

pub fn steady_state_sweep(
    geom: &Geometry,
    params: &CompoundParams,
    vary: SweepVariable,
    grid: &[f64],
) -> Result<Vec<SteadyRow>> {
    if grid.is_empty() {
        return Err(Error::domain("steady-state sweep grid is empty"));
    }
    grid.iter()
        .map(|&value| {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::domain(format!("sweep values must be positive, got {value}")));
            }
            let ss = match vary {
                SweepVariable::Partition => steady_state(geom, &params.with_cuticle_ratio(value))?,
                SweepVariable::Area => steady_state(&geom.with_contact_area(value)?, params)?,
                SweepVariable::Length => steady_state(&geom.with_cuticle_thickness(value)?, params)?,
            };
            Ok(SteadyRow { value, pct_drop: ss.pct_drop, pct_cuticle: ss.pct_cuticle, pct_leaf: ss.pct_leaf })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_geometry;
    use proptest::prelude::*;

    fn table_geom() -> Geometry {
        derive_geometry(30.0, 4.0, 1000.0).unwrap()
    }

    fn ai_params() -> CompoundParams {
        CompoundParams {
            diffusion: 0.4,
            k_in: 1.0 / 0.754,
            k_out: 1.0 / 0.754,
            s_in: 0.533,
            s_out: 0.533,
            loss: 0.0,
            c0: 1.77e-3,
        }
    }

    #[test]
    fn active_ingredient_equilibrium_concentration() {
        // Hand evaluation: k = 1/0.754, kV_A = 74_998.23, kV_B = 3_749_911.7,
        // AL = 11_309.73, so c_drop = kV_A·c0 / Σ = 3.46036e-5 (≈ 3.45e-5).
        let ss = steady_state(&table_geom(), &ai_params()).unwrap();
        assert!((ss.c_drop - 3.46036e-5).abs() / 3.46036e-5 < 1e-5, "{}", ss.c_drop);
        assert!((ss.m_uniform * ai_params().k_in - table_geom().contact_area() * ss.c_drop).abs() < 1e-15);
        assert!((ss.pct_drop + ss.pct_cuticle + ss.pct_leaf - 100.0).abs() < 1e-9);
        // Mass bookkeeping in concentration form.
        let g = table_geom();
        let total =
            g.droplet_volume() * ss.c_drop + g.cuticle_thickness() * ss.m_uniform + g.tissue_volume() * ss.c_leaf;
        assert!((total - g.droplet_volume() * 1.77e-3).abs() < 1e-12 * total);
    }

    #[test]
    fn weak_tissue_partition_excludes_tissue() {
        let mut p = ai_params();
        p.k_out = 1e-14;
        let g = table_geom();
        let ss = steady_state(&g, &p).unwrap();
        assert!(ss.pct_leaf < 1e-6);
        let ratio = ss.pct_drop / ss.pct_cuticle;
        let expect = p.k_in * g.droplet_volume() / (g.contact_area() * g.cuticle_thickness());
        assert!((ratio - expect).abs() / expect < 1e-6);
    }

    #[test]
    fn sink_dominated_limit() {
        let g = derive_geometry(30.0, 4.0, 1e9).unwrap();
        let ss = steady_state(&g, &ai_params()).unwrap();
        assert!(ss.pct_leaf > 99.99);
    }

    #[test]
    fn loss_rejected() {
        let mut p = ai_params();
        p.loss = 1e-3;
        assert!(matches!(steady_state(&table_geom(), &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn area_does_not_move_percentages() {
        let grid: Vec<f64> = (1..=20).map(|i| 500.0 * i as f64).collect();
        let rows = steady_state_sweep(&table_geom(), &ai_params(), SweepVariable::Area, &grid).unwrap();
        for r in &rows[1..] {
            assert!((r.pct_drop - rows[0].pct_drop).abs() < 1e-9);
            assert!((r.pct_cuticle - rows[0].pct_cuticle).abs() < 1e-9);
            assert!((r.pct_leaf - rows[0].pct_leaf).abs() < 1e-9);
        }
    }

    #[test]
    fn longer_cuticle_holds_more() {
        let grid: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let rows = steady_state_sweep(&table_geom(), &ai_params(), SweepVariable::Length, &grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].pct_cuticle > w[0].pct_cuticle);
        }
    }

    #[test]
    fn higher_wax_affinity_holds_more() {
        let grid: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let rows = steady_state_sweep(&table_geom(), &ai_params(), SweepVariable::Partition, &grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].pct_cuticle > w[0].pct_cuticle);
        }
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(steady_state_sweep(&table_geom(), &ai_params(), SweepVariable::Length, &[]).is_err());
    }

    proptest! {
        #[test]
        fn percentages_sum_to_hundred(
            k_in in 1e-3f64..1e3, k_out in 1e-3f64..1e3,
            r in 1.0f64..200.0, l in 0.1f64..50.0, lb in 1.0f64..5000.0,
        ) {
            let g = derive_geometry(r, l, lb).unwrap();
            let p = CompoundParams { k_in, k_out, ..ai_params() };
            let ss = steady_state(&g, &p).unwrap();
            prop_assert!((ss.pct_drop + ss.pct_cuticle + ss.pct_leaf - 100.0).abs() < 1e-9);
        }
    }
}
