//! Explicit, mass-conserving integration of the droplet / cuticle / tissue
//! system for both compounds.
//!
//! The cuticle uses linear finite elements on a uniform mesh with a lumped
//! (diagonal) mass matrix, so each node carries a quadrature weight `w_i` and
//! the semi-discrete system for the nodal densities `m_i` reads
//!
//! ```text
//! w_i·dm_i/dt = Σ_e ±D_e·(m_{e+1} − m_e)/h  + [i = 0]·J_in − [i = n]·J_out
//! V_A·dc_drop/dt = −J_in
//! V_B·dc_leaf/dt =  J_out − loss·V_B·c_leaf
//! ```
//!
//! The compartment ODEs receive exactly the boundary fluxes added to the end
//! nodes, so the discrete total is conserved to roundoff on every step.
//!
//! Time stepping is forward Euler. The step for the active ingredient is
//! bounded by the positivity limit `dt ≤ 1/max_i(diagonal rate_i)` evaluated
//! with the worst-case coefficient `D0·(1 + α)`; the interior part of that
//! bound is the familiar `h²/(2D)`. The adjuvant is sub-cycled inside each
//! active-ingredient step when its own limit is tighter, so the step sequence
//! of the active ingredient never depends on adjuvant parameters.

use crate::error::{Error, Result};
use crate::model::{Compound, CompoundParams, DiffusionModel, Geometry, SimState};

/// Uniform cuticle mesh with lumped quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Mesh {
    pub fn uniform(length: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::domain("mesh needs at least one cell"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::domain(format!("mesh length must be positive, got {length}")));
        }
        let h = length / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| i as f64 * h).collect();
        nodes[n_cells] = length;
        let mut weights = vec![h; n_cells + 1];
        weights[0] = 0.5 * h;
        weights[n_cells] = 0.5 * h;
        Ok(Mesh { n_cells, h, nodes, weights })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Lumped integral of a nodal field.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub n_cells: usize,
    /// Fraction of the explicit stability limit actually used.
    pub dt_safety: f64,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    /// Roundoff allowance for negative nodal densities.
    pub negative_clamp: f64,
}

impl SolverConfig {
    /// Defaults with a single output at `t_end`.
    pub fn new(t_end: f64) -> Self {
        SolverConfig { n_cells: 40, dt_safety: 0.5, t_end, output_times: vec![t_end], negative_clamp: 1e-12 }
    }

    /// Outputs every `interval` minutes from 0, plus `t_end`.
    pub fn with_output_interval(mut self, interval: f64) -> Self {
        let n = (self.t_end / interval).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * interval).collect();
        if times.last().is_none_or(|&t| t < self.t_end) {
            times.push(self.t_end);
        }
        self.output_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 4 {
            return Err(Error::domain(format!("n_cells must be at least 4, got {}", self.n_cells)));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::domain(format!("dt_safety must lie in (0, 1], got {}", self.dt_safety)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::domain(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.negative_clamp >= 0.0) {
            return Err(Error::domain("negative_clamp must be non-negative"));
        }
        for w in self.output_times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::domain("output_times must be strictly increasing"));
            }
        }
        if let Some(&t) = self.output_times.iter().find(|&&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::domain(format!("output time {t} lies outside [0, {}]", self.t_end)));
        }
        Ok(())
    }
}

/// Flux from droplet into the cuticle (%/min).
pub fn flux_in(c_drop: f64, m_node0: f64, params: &CompoundParams, area: f64) -> f64 {
    params.s_in * area * (c_drop - params.k_in * m_node0 / area)
}

/// Flux from the cuticle into the leaf tissue (%/min).
pub fn flux_out(m_node_l: f64, c_leaf: f64, params: &CompoundParams, area: f64) -> f64 {
    params.s_out * area * (params.k_out * m_node_l / area - c_leaf)
}

/// Share of the initial total in each compartment (%).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Percentages {
    pub droplet: f64,
    pub cuticle: f64,
    pub leaf: f64,
    pub rest: f64,
}

impl Percentages {
    pub fn as_array(&self) -> [f64; 4] {
        [self.droplet, self.cuticle, self.leaf, self.rest]
    }

    pub fn sum(&self) -> f64 {
        self.droplet + self.cuticle + self.leaf + self.rest
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub adjuvant: SimState,
    pub active: SimState,
    pub pct_adjuvant: Percentages,
    pub pct_active: Percentages,
}

impl Snapshot {
    pub fn state(&self, c: Compound) -> &SimState {
        match c {
            Compound::Adjuvant => &self.adjuvant,
            Compound::Active => &self.active,
        }
    }

    pub fn percentages(&self, c: Compound) -> &Percentages {
        match c {
            Compound::Adjuvant => &self.pct_adjuvant,
            Compound::Active => &self.pct_active,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub snapshots: Vec<Snapshot>,
    /// Number of active-ingredient steps taken.
    pub steps: u64,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// One compound's discrete system.
#[derive(Debug, Clone)]
struct Compartments {
    params: CompoundParams,
    state: SimState,
    rate: Vec<f64>,
    initial_total: f64,
}

impl Compartments {
    fn new(params: CompoundParams, state: SimState, geom: &Geometry, mesh: &Mesh) -> Self {
        let rate = vec![0.0; mesh.weights().len()];
        let mut c = Compartments { params, state, rate, initial_total: 0.0 };
        c.initial_total = c.total(geom, mesh);
        c
    }

    fn total(&self, geom: &Geometry, mesh: &Mesh) -> f64 {
        geom.droplet_volume() * self.state.c_drop
            + mesh.integrate(&self.state.m)
            + geom.tissue_volume() * self.state.c_leaf
            + self.state.lost
    }

    fn percentages(&self, geom: &Geometry, mesh: &Mesh) -> Percentages {
        if self.initial_total == 0.0 {
            return Percentages::default();
        }
        let scale = 100.0 / self.initial_total;
        Percentages {
            droplet: geom.droplet_volume() * self.state.c_drop * scale,
            cuticle: mesh.integrate(&self.state.m) * scale,
            leaf: geom.tissue_volume() * self.state.c_leaf * scale,
            rest: self.state.lost * scale,
        }
    }

    /// Largest diagonal decay rate of the semi-discrete system with every
    /// element coefficient at `d_max`; its reciprocal is the positivity limit.
    fn max_rate(&self, geom: &Geometry, mesh: &Mesh, d_max: f64) -> f64 {
        let p = &self.params;
        let h = mesh.h();
        let w = mesh.weights();
        let n = mesh.n_cells();
        let droplet = p.s_in * geom.contact_area() / geom.droplet_volume();
        let first = (d_max / h + p.s_in * p.k_in) / w[0];
        let interior = 2.0 * d_max / (h * h);
        let last = (d_max / h + p.s_out * p.k_out) / w[n];
        let tissue = (p.s_out * geom.contact_area() + p.loss * geom.tissue_volume()) / geom.tissue_volume();
        [droplet, first, interior, last, tissue].into_iter().fold(0.0, f64::max)
    }

    /// Forward-Euler update with per-element coefficients `d_elem`.
    fn advance(&mut self, geom: &Geometry, mesh: &Mesh, d_elem: &[f64], dt: f64) {
        let area = geom.contact_area();
        let inv_h = 1.0 / mesh.h();
        let n = mesh.n_cells();
        let s = &mut self.state;
        let rate = &mut self.rate;

        let j_in = flux_in(s.c_drop, s.m[0], &self.params, area);
        let j_out = flux_out(s.m[n], s.c_leaf, &self.params, area);

        rate.fill(0.0);
        for (e, d) in d_elem.iter().enumerate() {
            let q = d * inv_h * (s.m[e + 1] - s.m[e]);
            rate[e] += q;
            rate[e + 1] -= q;
        }
        rate[0] += j_in;
        rate[n] -= j_out;

        for ((m, r), w) in s.m.iter_mut().zip(rate.iter()).zip(mesh.weights()) {
            *m += dt * r / w;
        }
        let leak = self.params.loss * geom.tissue_volume() * s.c_leaf;
        s.c_drop -= dt * j_in / geom.droplet_volume();
        s.c_leaf += dt * (j_out - leak) / geom.tissue_volume();
        s.lost += dt * leak;
        s.t += dt;
    }

    /// Smallest value and finiteness over the whole state.
    fn check(&self, tol: f64, step: u64, who: Compound) -> Result<()> {
        let s = &self.state;
        let mut min = s.c_drop.min(s.c_leaf);
        let mut finite = s.c_drop.is_finite() && s.c_leaf.is_finite() && s.lost.is_finite();
        for &v in &s.m {
            min = min.min(v);
            finite &= v.is_finite();
        }
        if !finite {
            return Err(Error::Solver { step, t: s.t, reason: format!("{who} state became non-finite") });
        }
        if min < -tol {
            return Err(Error::Solver {
                step,
                t: s.t,
                reason: format!("{who} state went negative ({min:e}); time step exceeds the explicit limit"),
            });
        }
        Ok(())
    }
}

/// Coupled two-compound simulation, advanced step by step.
#[derive(Debug, Clone)]
pub struct Simulation {
    geom: Geometry,
    mesh: Mesh,
    cfg: SolverConfig,
    d_model: DiffusionModel,
    adjuvant: Compartments,
    active: Compartments,
    d_adjuvant: Vec<f64>,
    d_active: Vec<f64>,
    dt_limit_active: f64,
    dt_limit_adjuvant: f64,
    steps: u64,
}

impl Simulation {
    /// Starts from the standard initial condition: everything in the droplet.
    pub fn new(
        geom: &Geometry,
        adjuvant: &CompoundParams,
        active: &CompoundParams,
        d_model_active: &DiffusionModel,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        let n = cfg.n_cells + 1;
        let fresh = |p: &CompoundParams| SimState { t: 0.0, c_drop: p.c0, m: vec![0.0; n], c_leaf: 0.0, lost: 0.0 };
        Self::from_states(geom, adjuvant, active, d_model_active, cfg, fresh(adjuvant), fresh(active))
    }

    /// Starts from arbitrary states (each `m` must have `n_cells + 1` nodes).
    /// The initial totals used for percentages are taken from these states.
    pub fn from_states(
        geom: &Geometry,
        adjuvant: &CompoundParams,
        active: &CompoundParams,
        d_model_active: &DiffusionModel,
        cfg: &SolverConfig,
        adjuvant_state: SimState,
        active_state: SimState,
    ) -> Result<Self> {
        cfg.validate()?;
        adjuvant.validate()?;
        active.validate()?;
        d_model_active.validate()?;
        let mesh = Mesh::uniform(geom.cuticle_thickness(), cfg.n_cells)?;
        for (who, s) in [(Compound::Adjuvant, &adjuvant_state), (Compound::Active, &active_state)] {
            if s.m.len() != cfg.n_cells + 1 {
                return Err(Error::domain(format!(
                    "{who} profile has {} nodes, mesh has {}",
                    s.m.len(),
                    cfg.n_cells + 1
                )));
            }
        }
        let adjuvant = Compartments::new(*adjuvant, adjuvant_state, geom, &mesh);
        let active = Compartments::new(*active, active_state, geom, &mesh);

        let d_adjuvant = vec![adjuvant.params.diffusion; cfg.n_cells];
        let d_active = vec![d_model_active.baseline(); cfg.n_cells];

        let dt_limit_active = 1.0 / active.max_rate(geom, &mesh, d_model_active.upper_bound());
        let dt_limit_adjuvant = 1.0 / adjuvant.max_rate(geom, &mesh, adjuvant.params.diffusion);

        Ok(Simulation {
            geom: *geom,
            mesh,
            cfg: cfg.clone(),
            d_model: *d_model_active,
            adjuvant,
            active,
            d_adjuvant,
            d_active,
            dt_limit_active,
            dt_limit_adjuvant,
            steps: 0,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn state(&self, c: Compound) -> &SimState {
        match c {
            Compound::Adjuvant => &self.adjuvant.state,
            Compound::Active => &self.active.state,
        }
    }

    pub fn percentages(&self, c: Compound) -> Percentages {
        match c {
            Compound::Adjuvant => self.adjuvant.percentages(&self.geom, &self.mesh),
            Compound::Active => self.active.percentages(&self.geom, &self.mesh),
        }
    }

    /// Current total amount (droplet + cuticle + tissue + lost) of a compound.
    pub fn total(&self, c: Compound) -> f64 {
        match c {
            Compound::Adjuvant => self.adjuvant.total(&self.geom, &self.mesh),
            Compound::Active => self.active.total(&self.geom, &self.mesh),
        }
    }

    /// Largest stable step for the active ingredient (before `dt_safety`).
    pub fn dt_limit(&self) -> f64 {
        self.dt_limit_active
    }

    /// Step actually used: `dt_safety` times the stability limit.
    pub fn dt_max(&self) -> f64 {
        self.cfg.dt_safety * self.dt_limit_active
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Advances both compounds by `dt`. The active-ingredient coefficients are
    /// taken from the adjuvant profile at the start of the step; the adjuvant
    /// then sub-cycles over the same interval.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let step = self.steps + 1;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Solver { step, t: self.active.state.t, reason: format!("invalid time step {dt}") });
        }
        if dt > self.dt_limit_active * (1.0 + 1e-12) {
            return Err(Error::Solver {
                step,
                t: self.active.state.t,
                reason: format!("time step {dt} exceeds stability limit {}", self.dt_limit_active),
            });
        }

        if !self.d_model.is_inert() {
            let clamp = self.cfg.negative_clamp;
            let m = &self.adjuvant.state.m;
            for (e, d) in self.d_active.iter_mut().enumerate() {
                let local = 0.5 * (m[e] + m[e + 1]);
                if local < -clamp {
                    return Err(Error::Solver {
                        step,
                        t: self.adjuvant.state.t,
                        reason: format!("adjuvant density {local:e} below roundoff allowance in element {e}"),
                    });
                }
                *d = self.d_model.eval_unchecked(local.max(0.0));
            }
        }
        let t_start = self.active.state.t;
        self.active.advance(&self.geom, &self.mesh, &self.d_active, dt);

        let sub_limit = self.cfg.dt_safety * self.dt_limit_adjuvant;
        let substeps = if dt <= sub_limit { 1 } else { (dt / sub_limit).ceil() as usize };
        let sub_dt = dt / substeps as f64;
        for _ in 0..substeps {
            self.adjuvant.advance(&self.geom, &self.mesh, &self.d_adjuvant, sub_dt);
        }
        // Keep both clocks on the active-ingredient step sequence.
        self.adjuvant.state.t = t_start + dt;
        self.active.state.t = t_start + dt;

        self.steps = step;
        let tol = self.cfg.negative_clamp;
        self.active.check(tol, step, Compound::Active)?;
        self.adjuvant.check(tol, step, Compound::Adjuvant)?;
        Ok(())
    }

    /// Integrates to `t` using equal steps no larger than [`Self::dt_max`].
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let now = self.active.state.t;
        let span = t - now;
        if span <= 0.0 {
            return Ok(());
        }
        let n = (span / self.dt_max()).ceil().max(1.0) as u64;
        let dt = span / n as f64;
        for _ in 0..n {
            self.step(dt)?;
        }
        self.adjuvant.state.t = t;
        self.active.state.t = t;
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            t: self.active.state.t,
            adjuvant: self.adjuvant.state.clone(),
            active: self.active.state.clone(),
            pct_adjuvant: self.percentages(Compound::Adjuvant),
            pct_active: self.percentages(Compound::Active),
        }
    }
}

/// Runs the coupled model from the standard initial condition, recording a
/// snapshot at every output time.
pub fn simulate(
    geom: &Geometry,
    adjuvant: &CompoundParams,
    active: &CompoundParams,
    d_model_active: &DiffusionModel,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let mut sim = Simulation::new(geom, adjuvant, active, d_model_active, cfg)?;
    let mut snapshots = Vec::with_capacity(cfg.output_times.len());
    for &t in &cfg.output_times {
        sim.advance_to(t)?;
        snapshots.push(sim.snapshot());
    }
    sim.advance_to(cfg.t_end)?;
    Ok(Trajectory { mesh: sim.mesh.clone(), snapshots, steps: sim.steps })
}
