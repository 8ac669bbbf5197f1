//! Closed-form estimators that turn sparse compartment measurements into
//! transport parameters, with interval propagation.
//!
//! Every estimator is monotone in its data argument, so a confidence band is
//! propagated by evaluating the formula at the band endpoints.

use std::fmt;

use crate::data::{DatasetSeries, Row};
use crate::error::{Error, Result};
use crate::model::{Compartment, Compound, CompoundParams, Geometry};

/// Diffusion coefficient whose lag time across a membrane of thickness `l`
/// is `t_lag`: `D = L² / (2·t_lag)`.
pub fn diffusion_from_lag(l: f64, t_lag: f64) -> Result<f64> {
    if !(l > 0.0 && t_lag > 0.0) {
        return Err(Error::domain(format!("lag estimate needs L > 0 and t_lag > 0 (got {l}, {t_lag})")));
    }
    Ok(l * l / (2.0 * t_lag))
}

/// Cuticle-over-aqueous concentration ratio at equilibrium.
pub fn partition_from_equilibrium(c_cuticle: f64, c_aqueous: f64) -> Result<f64> {
    if !(c_cuticle > 0.0 && c_aqueous > 0.0) {
        return Err(Error::domain(format!(
            "partition ratio needs positive concentrations (got {c_cuticle}, {c_aqueous})"
        )));
    }
    Ok(c_cuticle / c_aqueous)
}

/// Entry speed from the early exponential decay of the droplet, neglecting
/// back-flux from the still-empty cuticle: `s = −V_A·ln(c_t/c0) / (A·t)`.
pub fn speed_from_decay(v_a: f64, area: f64, c0: f64, c_t: f64, t: f64) -> Result<f64> {
    if !(v_a > 0.0 && area > 0.0 && t > 0.0) {
        return Err(Error::domain("decay estimate needs positive V_A, A and t"));
    }
    if !(c_t > 0.0) {
        return Err(Error::domain(format!("droplet concentration must be positive, got {c_t}")));
    }
    if !(c_t < c0) {
        return Err(Error::domain(format!("no decay observed: c_t = {c_t} is not below c0 = {c0}")));
    }
    Ok(-v_a * (c_t / c0).ln() / (area * t))
}

/// Loss rate balancing the observed system-wide decline: `ν = rate / (V_B·c_leaf)`.
pub fn loss_rate_from_balance(total_rate: f64, v_b: f64, c_leaf: f64) -> Result<f64> {
    if !(total_rate >= 0.0 && total_rate.is_finite()) {
        return Err(Error::domain(format!("total loss rate must be non-negative, got {total_rate}")));
    }
    let denom = v_b * c_leaf;
    if !(denom > 0.0) {
        return Err(Error::domain(format!("loss rate needs positive tissue amount (V_B = {v_b}, c_leaf = {c_leaf})")));
    }
    Ok(total_rate / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateWithRange {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub unit: &'static str,
}

impl EstimateWithRange {
    /// Builds the estimate from the formula evaluated at the mean and at both
    /// data endpoints; the endpoints are sorted.
    fn from_endpoints(mean: f64, a: f64, b: f64, unit: &'static str) -> Self {
        EstimateWithRange { mean, lo: a.min(b), hi: a.max(b), unit }
    }

    fn reciprocal(&self) -> Self {
        EstimateWithRange { mean: 1.0 / self.mean, lo: 1.0 / self.hi, hi: 1.0 / self.lo, unit: self.unit }
    }
}

impl fmt::Display for EstimateWithRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4e} ({:.4e}, {:.4e}) {}", self.mean, self.lo, self.hi, self.unit)
    }
}

/// Estimated transport parameters for one compound.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundEstimate {
    pub compound: Compound,
    pub diffusion: EstimateWithRange,
    /// Cuticle-over-water ratio (`κ_{1,A}` / `K_{1,A}`).
    pub cuticle_ratio: EstimateWithRange,
    pub k_in: EstimateWithRange,
    pub k_out: EstimateWithRange,
    pub s_in: EstimateWithRange,
    pub s_out: EstimateWithRange,
    pub loss: EstimateWithRange,
    /// System-wide loss rate the balance was solved against (%/min).
    pub total_loss_rate: f64,
}

impl CompoundEstimate {
    /// Parameter set at the central estimates.
    pub fn to_params(&self, c0: f64) -> CompoundParams {
        CompoundParams {
            diffusion: self.diffusion.mean,
            k_in: self.k_in.mean,
            k_out: self.k_out.mean,
            s_in: self.s_in.mean,
            s_out: self.s_out.mean,
            loss: self.loss.mean,
            c0,
        }
    }

    /// Report rows named after the conventional symbols of each compound.
    pub fn named_rows(&self) -> Vec<(&'static str, &EstimateWithRange)> {
        let names = match self.compound {
            Compound::Adjuvant => ["D_P", "kappa_1A", "kappa_A1", "kappa_B1", "lambda_A", "lambda_B", "beta"],
            Compound::Active => ["D_Q0", "K_1A", "K_A1", "K_B1", "mu_A", "mu_B", "eta"],
        };
        let values =
            [&self.diffusion, &self.cuticle_ratio, &self.k_in, &self.k_out, &self.s_in, &self.s_out, &self.loss];
        names.into_iter().zip(values).collect()
    }
}

/// Where each estimator took its data from.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Anchors {
    decay_time: f64,
    equilibrium_times: [f64; 3],
    end_time: f64,
    previous_rest_time: f64,
}

fn key(c: Compound, comp: Compartment, t: impl fmt::Display) -> String {
    format!("({c}, {comp}, t={t})")
}

fn locate(data: &DatasetSeries, c: Compound, missing: &mut Vec<String>) -> Option<Anchors> {
    let times = data.times(c);
    let has = |comp, t| data.get(c, comp, t).is_some();
    let before = missing.len();

    if !has(Compartment::Droplet, 0.0) {
        missing.push(key(c, Compartment::Droplet, 0));
    }
    let decay_time = times.iter().copied().find(|&t| t > 0.0 && has(Compartment::Droplet, t));
    if decay_time.is_none() {
        missing.push(key(c, Compartment::Droplet, "first sample after 0"));
    }

    let eq: Vec<f64> = times
        .iter()
        .rev()
        .copied()
        .filter(|&t| t > 0.0 && has(Compartment::Droplet, t) && has(Compartment::Cuticle, t))
        .take(3)
        .collect();
    if eq.len() < 3 {
        for i in eq.len()..3 {
            missing.push(format!("({c}, droplet+cuticle, equilibrium sample {} of 3)", i + 1));
        }
    }

    let end_time = times.last().copied();
    let mut previous_rest_time = None;
    if let Some(t_end) = end_time {
        if !has(Compartment::LeafTissue, t_end) {
            missing.push(key(c, Compartment::LeafTissue, t_end));
        }
        if !has(Compartment::Rest, t_end) {
            missing.push(key(c, Compartment::Rest, t_end));
        }
        previous_rest_time = times.iter().rev().copied().find(|&t| t < t_end && has(Compartment::Rest, t));
        if previous_rest_time.is_none() {
            missing.push(key(c, Compartment::Rest, format!("before {t_end}")));
        }
    } else {
        missing.push(format!("({c}, any rows)"));
    }

    if missing.len() > before {
        return None;
    }
    Some(Anchors {
        decay_time: decay_time?,
        equilibrium_times: [eq[2], eq[1], eq[0]],
        end_time: end_time?,
        previous_rest_time: previous_rest_time?,
    })
}

/// Mean, lower and upper concentration of a compartment row.
fn concentration(row: &Row, volume: f64) -> [f64; 3] {
    [row.mean_pct / volume, row.ci_lo_pct / volume, row.ci_hi_pct / volume]
}

fn averaged(data: &DatasetSeries, c: Compound, comp: Compartment, times: &[f64; 3], volume: f64) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for &t in times {
        let row = data.get(c, comp, t).expect("presence checked");
        for (a, v) in acc.iter_mut().zip(concentration(row, volume)) {
            *a += v;
        }
    }
    acc.map(|v| v / 3.0)
}

fn estimate_compound(
    data: &DatasetSeries,
    geom: &Geometry,
    c: Compound,
    at: Anchors,
    t_lag_range: (f64, f64),
) -> Result<CompoundEstimate> {
    let v_a = geom.droplet_volume();
    let v_b = geom.tissue_volume();
    let area = geom.contact_area();
    let l = geom.cuticle_thickness();
    let row = |comp, t| data.get(c, comp, t).expect("presence checked");

    let (t_lo, t_hi) = t_lag_range;
    let diffusion = EstimateWithRange::from_endpoints(
        diffusion_from_lag(l, 0.5 * (t_lo + t_hi))?,
        diffusion_from_lag(l, t_hi)?,
        diffusion_from_lag(l, t_lo)?,
        "um^2/min",
    );

    // Partition: equal-weight average of the last three samples, then the
    // ratio. The range pairs opposite endpoints.
    let cut = averaged(data, c, Compartment::Cuticle, &at.equilibrium_times, area * l);
    let drop = averaged(data, c, Compartment::Droplet, &at.equilibrium_times, v_a);
    let cuticle_ratio = EstimateWithRange::from_endpoints(
        partition_from_equilibrium(cut[0], drop[0])?,
        partition_from_equilibrium(cut[1], drop[2])?,
        partition_from_equilibrium(cut[2], drop[1])?,
        "-",
    );
    let k_in = cuticle_ratio.reciprocal();

    let c0 = row(Compartment::Droplet, 0.0).mean_pct / v_a;
    let [ct, ct_lo, ct_hi] = concentration(row(Compartment::Droplet, at.decay_time), v_a);
    let t = at.decay_time;
    let s_in = EstimateWithRange::from_endpoints(
        speed_from_decay(v_a, area, c0, ct, t)?,
        speed_from_decay(v_a, area, c0, ct_hi, t)?,
        speed_from_decay(v_a, area, c0, ct_lo, t)?,
        "um/min",
    );

    let rest_end = row(Compartment::Rest, at.end_time).mean_pct;
    let rest_prev = row(Compartment::Rest, at.previous_rest_time).mean_pct;
    let total_loss_rate = (rest_end - rest_prev) / (at.end_time - at.previous_rest_time);
    let [cl, cl_lo, cl_hi] = concentration(row(Compartment::LeafTissue, at.end_time), v_b);
    let loss = EstimateWithRange::from_endpoints(
        loss_rate_from_balance(total_loss_rate, v_b, cl)?,
        loss_rate_from_balance(total_loss_rate, v_b, cl_hi)?,
        loss_rate_from_balance(total_loss_rate, v_b, cl_lo)?,
        "1/min",
    );

    Ok(CompoundEstimate {
        compound: c,
        diffusion,
        cuticle_ratio,
        k_out: k_in.clone(),
        k_in,
        s_out: s_in.clone(),
        s_in,
        loss,
        total_loss_rate,
    })
}

/// Applies every estimator to a dataset.
///
/// * diffusion from the lag-time bracket (central value at the midpoint lag)
/// * partition from the last three samples holding droplet and cuticle rows
/// * entry speed from the droplet at 0 and at the first later sample
/// * loss rate from the rest-of-plant slope over the final interval and the
///   final tissue value
///
/// Exit-side speed and partition are set equal to the entry-side ones.
pub fn estimate_all(
    data: &DatasetSeries,
    geom: &Geometry,
    t_lag_range: (f64, f64),
) -> Result<(CompoundEstimate, CompoundEstimate)> {
    let (t_lo, t_hi) = t_lag_range;
    if !(t_lo > 0.0 && t_lo <= t_hi) {
        return Err(Error::domain(format!("invalid lag-time range ({t_lo}, {t_hi})")));
    }
    let mut missing = Vec::new();
    let aj = locate(data, Compound::Adjuvant, &mut missing);
    let ai = locate(data, Compound::Active, &mut missing);
    match (aj, ai) {
        (Some(aj), Some(ai)) => Ok((
            estimate_compound(data, geom, Compound::Adjuvant, aj, t_lag_range)?,
            estimate_compound(data, geom, Compound::Active, ai, t_lag_range)?,
        )),
        _ => Err(Error::MissingRows(missing)),
    }
}
