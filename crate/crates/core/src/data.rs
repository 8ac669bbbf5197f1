//! Experimental time-series ingestion and CSV output of every result artifact.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimation::CompoundEstimate;
use crate::model::{Compartment, Compound};
use crate::solver::Trajectory;
use crate::steady::SteadyRow;
use crate::sweep::SweepResult;

pub const DATASET_HEADER: [&str; 6] = ["t_min", "compound", "compartment", "mean_pct", "ci_lo_pct", "ci_hi_pct"];
pub const TRAJECTORY_HEADER: [&str; 6] = ["t_min", "compound", "pct_droplet", "pct_cuticle", "pct_leaf", "pct_rest"];
pub const PROFILE_HEADER: [&str; 4] = ["t_min", "compound", "x_um", "amount_density"];
pub const STEADY_HEADER: [&str; 4] = ["value", "pct_droplet", "pct_cuticle", "pct_leaf"];
pub const ESTIMATE_HEADER: [&str; 5] = ["param", "mean", "lo", "hi", "unit"];
pub const SWEEP_HEADER: [&str; 11] = [
    "alpha",
    "sigma",
    "pct_droplet",
    "pct_cuticle",
    "pct_leaf",
    "pct_rest",
    "feas_droplet",
    "feas_cuticle",
    "feas_leaf",
    "feas_rest",
    "feas_all",
];

/// Allowed deviation of a full compartment set from 100 %.
pub const CLOSURE_TOLERANCE_PCT: f64 = 2.0;

/// One measured mean with its 95 % confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub compound: Compound,
    pub compartment: Compartment,
    pub mean_pct: f64,
    pub ci_lo_pct: f64,
    pub ci_hi_pct: f64,
}

type Key = (Compound, Compartment, u64);

fn time_key(t: f64) -> u64 {
    // +0.0 and -0.0 address the same sample.
    (t + 0.0).to_bits()
}

/// Validated experimental series, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSeries {
    rows: Vec<Row>,
    index: BTreeMap<Key, usize>,
}

impl DatasetSeries {
    /// Validates and indexes rows. `line` numbers in errors refer to the
    /// position in `rows` plus one for the header.
    pub fn from_rows(rows: Vec<Row>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            let line = i + 2;
            check_row(r, line)?;
            if index.insert((r.compound, r.compartment, time_key(r.t)), i).is_some() {
                return Err(Error::Dataset(format!(
                    "line {line}: duplicate key ({}, {}, t={})",
                    r.compound, r.compartment, r.t
                )));
            }
        }
        let data = DatasetSeries { rows, index };
        data.check_closure()?;
        Ok(data)
    }

    fn check_closure(&self) -> Result<()> {
        for c in Compound::ALL {
            for t in self.times(c) {
                let means: Option<Vec<f64>> =
                    Compartment::ALL.iter().map(|&comp| self.get(c, comp, t).map(|r| r.mean_pct)).collect();
                if let Some(means) = means {
                    let sum: f64 = means.iter().sum();
                    if (sum - 100.0).abs() > CLOSURE_TOLERANCE_PCT {
                        return Err(Error::Dataset(format!(
                            "({c}, t={t}): compartment means sum to {sum:.3} %, more than {CLOSURE_TOLERANCE_PCT} % from 100"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn get(&self, c: Compound, comp: Compartment, t: f64) -> Option<&Row> {
        self.index.get(&(c, comp, time_key(t))).map(|&i| &self.rows[i])
    }

    /// Sorted distinct sample times recorded for a compound.
    pub fn times(&self, c: Compound) -> Vec<f64> {
        let set: BTreeSet<u64> = self.rows.iter().filter(|r| r.compound == c).map(|r| time_key(r.t)).collect();
        let mut times: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        times.sort_by(|a, b| a.total_cmp(b));
        times
    }
}

fn check_row(r: &Row, line: usize) -> Result<()> {
    let values = [("t_min", r.t), ("mean_pct", r.mean_pct), ("ci_lo_pct", r.ci_lo_pct), ("ci_hi_pct", r.ci_hi_pct)];
    for (name, v) in values {
        if !v.is_finite() {
            return Err(Error::Dataset(format!("line {line}: {name} is not finite")));
        }
    }
    if r.t < 0.0 {
        return Err(Error::Dataset(format!("line {line}: negative time {}", r.t)));
    }
    for (name, v) in &values[1..] {
        if !(0.0..=100.0).contains(v) {
            return Err(Error::Dataset(format!("line {line}: {name} = {v} outside [0, 100]")));
        }
    }
    if r.ci_lo_pct > r.ci_hi_pct {
        return Err(Error::Dataset(format!(
            "line {line}: ci_lo_pct {} exceeds ci_hi_pct {}",
            r.ci_lo_pct, r.ci_hi_pct
        )));
    }
    if !(r.ci_lo_pct <= r.mean_pct && r.mean_pct <= r.ci_hi_pct) {
        return Err(Error::Dataset(format!(
            "line {line}: mean {} outside its interval [{}, {}]",
            r.mean_pct, r.ci_lo_pct, r.ci_hi_pct
        )));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(i).unwrap_or("");
    raw.trim()
        .parse()
        .map_err(|e| Error::Dataset(format!("line {line}: column `{}`: cannot parse `{raw}`: {e}", DATASET_HEADER[i])))
}

/// Reads a dataset CSV with the exact header
/// `t_min,compound,compartment,mean_pct,ci_lo_pct,ci_hi_pct`.
pub fn load_dataset<R: Read>(source: R) -> Result<DatasetSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != DATASET_HEADER {
        let found = header.iter().collect::<Vec<_>>().join(",");
        return Err(Error::Dataset(format!("line 1: header must be `{}`, found `{found}`", DATASET_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != DATASET_HEADER.len() {
            return Err(Error::Dataset(format!(
                "line {line}: expected {} fields, found {}",
                DATASET_HEADER.len(),
                record.len()
            )));
        }
        let compound: Compound = parse_field(&record, 1, line)?;
        let compartment: Compartment = parse_field(&record, 2, line)?;
        rows.push(Row {
            t: parse_field(&record, 0, line)?,
            compound,
            compartment,
            mean_pct: parse_field(&record, 3, line)?,
            ci_lo_pct: parse_field(&record, 4, line)?,
            ci_hi_pct: parse_field(&record, 5, line)?,
        });
    }
    DatasetSeries::from_rows(rows)
}

/// Writes rows in canonical form (shortest round-trip number formatting).
pub fn write_dataset<W: Write>(data: &DatasetSeries, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(DATASET_HEADER)?;
    for r in data.rows() {
        w.write_record([
            r.t.to_string(),
            r.compound.to_string(),
            r.compartment.to_string(),
            r.mean_pct.to_string(),
            r.ci_lo_pct.to_string(),
            r.ci_hi_pct.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Confidence band `(lo, hi)` for an exact key.
pub fn band_at(data: &DatasetSeries, c: Compound, comp: Compartment, t: f64) -> Result<(f64, f64)> {
    data.get(c, comp, t)
        .map(|r| (r.ci_lo_pct, r.ci_hi_pct))
        .ok_or_else(|| Error::MissingRows(vec![format!("({c}, {comp}, t={t})")]))
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRAJECTORY_HEADER)?;
    for snap in &traj.snapshots {
        for c in Compound::ALL {
            let p = snap.percentages(c);
            let mut rec = vec![snap.t.to_string(), c.to_string()];
            rec.extend(p.as_array().iter().map(|v| v.to_string()));
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_profiles<W: Write>(traj: &Trajectory, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(PROFILE_HEADER)?;
    for snap in &traj.snapshots {
        for c in Compound::ALL {
            for (x, m) in traj.mesh.nodes().iter().zip(&snap.state(c).m) {
                w.write_record([snap.t.to_string(), c.to_string(), x.to_string(), m.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_steady<W: Write>(rows: &[SteadyRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(STEADY_HEADER)?;
    for r in rows {
        w.write_record([r.value, r.pct_drop, r.pct_cuticle, r.pct_leaf].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_estimates<W: Write>(estimates: &[&CompoundEstimate], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(ESTIMATE_HEADER)?;
    for est in estimates {
        for (name, e) in est.named_rows() {
            w.write_record([
                name.to_string(),
                e.mean.to_string(),
                e.lo.to_string(),
                e.hi.to_string(),
                e.unit.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

/// Sweep table; feasibility columns are `1`/`0`, empty when that
/// compartment had no band.
pub fn write_sweep<W: Write>(result: &SweepResult, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_HEADER)?;
    for cell in &result.cells {
        let mut rec = vec![cell.alpha.to_string(), cell.sigma.to_string()];
        rec.extend(cell.pct.as_array().iter().map(|v| v.to_string()));
        rec.extend(cell.feasible.iter().map(|&f| flag(f).to_string()));
        rec.push(flag(Some(cell.feasible_all)).to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}
