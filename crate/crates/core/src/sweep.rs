//! Grid search over the saturation parameters `(alpha, sigma)` of the active
//! ingredient's diffusion law.
//!
//! Every cell is an independent full simulation. Cells run on a rayon pool
//! when the `parallel` feature is on and sequentially otherwise; results are
//! stored alpha-major whatever the completion order.

use std::fmt;

use crate::data::DatasetSeries;
use crate::error::{Error, Result};
use crate::model::{Compartment, Compound, CompoundParams, DiffusionModel, Geometry};
use crate::solver::{Percentages, Simulation, SolverConfig};

/// Optional closed `(lo, hi)` band per compartment, indexed by
/// [`Compartment::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bands(pub [Option<(f64, f64)>; 4]);

impl Bands {
    pub fn none() -> Self {
        Bands([None; 4])
    }

    pub fn with(mut self, comp: Compartment, band: (f64, f64)) -> Self {
        self.0[comp.index()] = Some(band);
        self
    }

    pub fn get(&self, comp: Compartment) -> Option<(f64, f64)> {
        self.0[comp.index()]
    }

    /// Confidence bands of `compound` at time `t` for the selected compartments.
    pub fn from_dataset(data: &DatasetSeries, compound: Compound, t: f64, select: &[Compartment]) -> Result<Self> {
        let mut bands = Bands::none();
        let mut missing = Vec::new();
        for &comp in select {
            match data.get(compound, comp, t) {
                Some(r) => bands.0[comp.index()] = Some((r.ci_lo_pct, r.ci_hi_pct)),
                None => missing.push(format!("({compound}, {comp}, t={t})")),
            }
        }
        if missing.is_empty() {
            Ok(bands)
        } else {
            Err(Error::MissingRows(missing))
        }
    }

    fn validate(&self) -> Result<()> {
        for (comp, band) in Compartment::ALL.iter().zip(self.0) {
            if let Some((lo, hi)) = band {
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(Error::domain(format!("band for {comp} is not an interval: ({lo}, {hi})")));
                }
            }
        }
        Ok(())
    }

    fn classify(&self, pct: &Percentages) -> [Option<bool>; 4] {
        let values = pct.as_array();
        let mut out = [None; 4];
        for i in 0..4 {
            out[i] = self.0[i].map(|(lo, hi)| lo <= values[i] && values[i] <= hi);
        }
        out
    }
}

/// How the cells are distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `jobs` worker threads; `0` lets rayon choose. Runs sequentially when
    /// the crate is built without the `parallel` feature.
    Parallel {
        jobs: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    pub sigma: f64,
    /// Active-ingredient percentages at the end time.
    pub pct: Percentages,
    /// Per-compartment band containment; `None` where no band was given.
    pub feasible: [Option<bool>; 4],
    pub feasible_all: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub alpha_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub bands: Bands,
    /// Alpha-major: cell `(i, j)` sits at `i * sigma_grid.len() + j`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i_alpha: usize, j_sigma: usize) -> &SweepCell {
        &self.cells[i_alpha * self.sigma_grid.len() + j_sigma]
    }

    /// Cell whose coordinates match `(alpha, sigma)` to within 1e-9.
    pub fn find(&self, alpha: f64, sigma: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| (c.alpha - alpha).abs() < 1e-9 && (c.sigma - sigma).abs() < 1e-9)
    }

    /// Same percentages, masks recomputed against other bands.
    pub fn with_bands(&self, bands: Bands) -> Result<SweepResult> {
        bands.validate()?;
        let cells = self.cells.iter().map(|c| make_cell(c.alpha, c.sigma, c.pct, &bands)).collect();
        Ok(SweepResult { alpha_grid: self.alpha_grid.clone(), sigma_grid: self.sigma_grid.clone(), bands, cells })
    }
}

fn make_cell(alpha: f64, sigma: f64, pct: Percentages, bands: &Bands) -> SweepCell {
    let feasible = bands.classify(&pct);
    let feasible_all = feasible.iter().all(|f| f.unwrap_or(true));
    SweepCell { alpha, sigma, pct, feasible, feasible_all }
}

fn run_cell(
    geom: &Geometry,
    aj: &CompoundParams,
    ai: &CompoundParams,
    d_q0: f64,
    alpha: f64,
    sigma: f64,
    cfg: &SolverConfig,
) -> Result<Percentages> {
    let model = DiffusionModel::saturating(d_q0, alpha, sigma);
    let ai = CompoundParams { diffusion: d_q0, ..*ai };
    let wrap = |e: Error| Error::SweepCell { alpha, sigma, source: Box::new(e) };
    let mut sim = Simulation::new(geom, aj, &ai, &model, cfg).map_err(wrap)?;
    sim.advance_to(cfg.t_end).map_err(wrap)?;
    Ok(sim.percentages(Compound::Active))
}

/// Simulates every `(alpha, sigma)` cell to `cfg.t_end` and classifies the
/// final active-ingredient percentages against `bands`.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    geom: &Geometry,
    aj: &CompoundParams,
    ai: &CompoundParams,
    d_q0: f64,
    alpha_grid: &[f64],
    sigma_grid: &[f64],
    bands: &Bands,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<SweepResult> {
    if alpha_grid.is_empty() || sigma_grid.is_empty() {
        return Err(Error::domain("sweep grids must be non-empty"));
    }
    if let Some(s) = sigma_grid.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::domain(format!("sigma values must be positive, got {s}")));
    }
    if let Some(a) = alpha_grid.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::domain(format!("alpha values must be non-negative, got {a}")));
    }
    bands.validate()?;
    cfg.validate()?;
    DiffusionModel::constant(d_q0).validate()?;

    let coords: Vec<(f64, f64)> = alpha_grid.iter().flat_map(|&a| sigma_grid.iter().map(move |&s| (a, s))).collect();
    let eval = |&(a, s): &(f64, f64)| run_cell(geom, aj, ai, d_q0, a, s, cfg).map(|p| make_cell(a, s, p, bands));

    let cells = match exec {
        Execution::Sequential => coords.iter().map(eval).collect::<Result<Vec<_>>>()?,
        Execution::Parallel { jobs } => run_parallel(&coords, jobs, eval)?,
    };
    Ok(SweepResult { alpha_grid: alpha_grid.to_vec(), sigma_grid: sigma_grid.to_vec(), bands: *bands, cells })
}

#[cfg(feature = "parallel")]
fn run_parallel<F>(coords: &[(f64, f64)], jobs: usize, eval: F) -> Result<Vec<SweepCell>>
where
    F: Fn(&(f64, f64)) -> Result<SweepCell> + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    // Indexed collect keeps grid order.
    pool.install(|| coords.par_iter().map(eval).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<F>(coords: &[(f64, f64)], _jobs: usize, eval: F) -> Result<Vec<SweepCell>>
where
    F: Fn(&(f64, f64)) -> Result<SweepCell>,
{
    coords.iter().map(eval).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub cells: usize,
    pub feasible_cells: usize,
    pub non_empty: bool,
    pub alpha_zero_feasible: bool,
    /// `((alpha_min, alpha_max), (sigma_min, sigma_max))` over feasible cells.
    pub bounding_box: Option<((f64, f64), (f64, f64))>,
    pub bands: Bands,
}

pub fn summarize_region(result: &SweepResult) -> RegionReport {
    let feasible: Vec<&SweepCell> = result.cells.iter().filter(|c| c.feasible_all).collect();
    let bounding_box = feasible.first().map(|first| {
        feasible.iter().fold(((first.alpha, first.alpha), (first.sigma, first.sigma)), |((a0, a1), (s0, s1)), c| {
            ((a0.min(c.alpha), a1.max(c.alpha)), (s0.min(c.sigma), s1.max(c.sigma)))
        })
    });
    RegionReport {
        cells: result.cells.len(),
        feasible_cells: feasible.len(),
        non_empty: !feasible.is_empty(),
        alpha_zero_feasible: feasible.iter().any(|c| c.alpha == 0.0),
        bounding_box,
        bands: result.bands,
    }
}

impl fmt::Display for RegionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "feasible cells: {} of {}", self.feasible_cells, self.cells)?;
        for comp in Compartment::ALL {
            if let Some((lo, hi)) = self.bands.get(comp) {
                writeln!(f, "band {comp}: [{lo}, {hi}] %")?;
            }
        }
        match self.bounding_box {
            None => writeln!(f, "region: empty")?,
            Some(((a0, a1), (s0, s1))) => writeln!(f, "region: alpha in [{a0}, {a1}], sigma in [{s0}, {s1}]")?,
        }
        let zero = if self.alpha_zero_feasible { "feasible" } else { "infeasible" };
        writeln!(f, "alpha = 0: {zero}")
    }
}

/// `start, start + step, ...` up to `stop` inclusive. Values are rounded to
/// 12 decimals so that e.g. 0.1-step grids hit 1.5 and 3.0 exactly.
pub fn grid_from_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(Error::domain(format!("bad grid {start}:{stop}:{step}")));
    }
    if stop < start {
        return Err(Error::domain(format!("grid end {stop} is below its start {start}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Parses `start:stop:step`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::domain(format!("range `{spec}` must look like start:stop:step")));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|_| Error::domain(format!("range `{spec}`: `{p}` is not a number")))?;
    }
    grid_from_range(v[0], v[1], v[2])
}

pub fn default_alpha_grid() -> Vec<f64> {
    grid_from_range(0.0, 3.0, 0.1).expect("constant grid")
}

pub fn default_sigma_grid() -> Vec<f64> {
    grid_from_range(0.1, 6.0, 0.1).expect("constant grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_geometry;

    fn setup() -> (Geometry, CompoundParams, CompoundParams, SolverConfig) {
        let g = derive_geometry(30.0, 4.0, 1000.0).unwrap();
        let c0 = g.full_droplet_concentration();
        let aj = CompoundParams {
            diffusion: 0.4,
            k_in: 1.0 / 14.8,
            k_out: 1.0 / 14.8,
            s_in: 0.858,
            s_out: 0.858,
            loss: 1.37e-2,
            c0,
        };
        let ai = CompoundParams {
            diffusion: 0.4,
            k_in: 1.0 / 0.754,
            k_out: 1.0 / 0.754,
            s_in: 0.533,
            s_out: 0.533,
            loss: 1.26e-2,
            c0,
        };
        (g, aj, ai, SolverConfig { n_cells: 10, ..SolverConfig::new(20.0) })
    }

    #[test]
    fn grids() {
        let a = default_alpha_grid();
        assert_eq!(a.len(), 31);
        assert!(a.contains(&1.5) && a.contains(&3.0) && a[0] == 0.0);
        let s = default_sigma_grid();
        assert_eq!(s.len(), 60);
        assert!(s.contains(&3.0) && s[59] == 6.0);
        assert_eq!(parse_range("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn alpha_zero_row_is_flat_and_open_bands_accept_everything() {
        let (g, aj, ai, cfg) = setup();
        let bands = Bands::none()
            .with(Compartment::Droplet, (0.0, 100.0))
            .with(Compartment::Cuticle, (0.0, 100.0))
            .with(Compartment::LeafTissue, (0.0, 100.0))
            .with(Compartment::Rest, (0.0, 100.0));
        let r =
            run_sweep(&g, &aj, &ai, 0.4, &[0.0, 1.0], &[0.5, 2.0, 5.0], &bands, &cfg, Execution::Sequential).unwrap();
        for j in 1..3 {
            assert_eq!(r.cell(0, j).pct, r.cell(0, 0).pct);
        }
        assert!(r.cells.iter().all(|c| c.feasible_all));
        for c in &r.cells {
            assert!((c.pct.sum() - 100.0).abs() < 1e-9);
        }
        let rep = summarize_region(&r);
        assert_eq!(rep.bounding_box, Some(((0.0, 1.0), (0.5, 5.0))));
        assert!(rep.alpha_zero_feasible);
    }

    #[test]
    fn empty_region() {
        let (g, aj, ai, cfg) = setup();
        let bands = Bands::none().with(Compartment::Droplet, (-1.0, -0.5));
        let r = run_sweep(&g, &aj, &ai, 0.4, &[0.0], &[1.0], &bands, &cfg, Execution::Sequential).unwrap();
        let rep = summarize_region(&r);
        assert!(!rep.non_empty && rep.bounding_box.is_none());
        assert!(rep.to_string().contains("region: empty"));
    }

    #[test]
    fn parallel_matches_sequential() {
        let (g, aj, ai, cfg) = setup();
        let bands = Bands::none().with(Compartment::LeafTissue, (0.0, 1.0));
        let grid_a = [0.0, 0.7, 2.0];
        let grid_s = [0.3, 3.0];
        let seq = run_sweep(&g, &aj, &ai, 0.4, &grid_a, &grid_s, &bands, &cfg, Execution::Sequential).unwrap();
        let par =
            run_sweep(&g, &aj, &ai, 0.4, &grid_a, &grid_s, &bands, &cfg, Execution::Parallel { jobs: 3 }).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn bad_inputs() {
        let (g, aj, ai, cfg) = setup();
        let b = Bands::none();
        assert!(run_sweep(&g, &aj, &ai, 0.4, &[], &[1.0], &b, &cfg, Execution::Sequential).is_err());
        assert!(run_sweep(&g, &aj, &ai, 0.4, &[0.0], &[0.0], &b, &cfg, Execution::Sequential).is_err());
        let inverted = Bands::none().with(Compartment::Rest, (5.0, 1.0));
        assert!(run_sweep(&g, &aj, &ai, 0.4, &[0.0], &[1.0], &inverted, &cfg, Execution::Sequential).is_err());
    }
}
