use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafuptake::config::{RunConfig, BUNDLED_DATASET_CSV};
use leafuptake::data::{write_estimates, write_profiles, write_steady, write_sweep, write_trajectory};
use leafuptake::empirical::derived_table;
use leafuptake::sweep::parse_range;
use leafuptake::{
    estimate_all, load_dataset, run_sweep, simulate, steady_state_sweep, summarize_region, Bands, Compartment,
    Compound, DatasetSeries, Error, Execution, Result, SweepVariable,
};

/// Foliar uptake of an adjuvant and an active ingredient through the cuticle.
#[derive(Debug, Parser)]
#[command(name = "leafuptake", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; the bundled reference configuration if omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory. Without it the main table goes to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form equilibrium of the closed system (no loss to the plant).
    Steady {
        #[command(flatten)]
        common: Common,
        /// Quantity to vary: k (cuticle/water ratio), A (contact area) or L (cuticle thickness).
        #[arg(long, requires = "grid")]
        vary: Option<SweepVariable>,
        /// Values as a comma list or start:stop:step.
        #[arg(long, requires = "vary")]
        grid: Option<String>,
        /// Compound whose parameters are used.
        #[arg(long, default_value = "AI")]
        compound: Compound,
    },
    /// Time course of both compounds: compartment shares and cuticle profiles.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Parameter estimates (means and ranges) from a measured time series.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV; the bundled reconstructed dataset if omitted.
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Grid over (alpha, sigma) checked against confidence bands at t_end.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
        #[arg(long, default_value = "0:3:0.1", value_name = "START:STOP:STEP")]
        alpha: String,
        #[arg(long, default_value = "0.1:6:0.1", value_name = "START:STOP:STEP")]
        sigma: String,
        /// Compartments whose bands must contain the simulated share.
        #[arg(long, value_delimiter = ',', default_value = "droplet,leaf_tissue,rest")]
        bands: Vec<Compartment>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Partition and diffusion coefficients from literature correlations.
    Empirical {
        #[arg(long, value_name = "X", allow_negative_numbers = true)]
        logpow: Option<f64>,
        /// McGowan volume in cm^3/mol.
        #[arg(long, value_name = "MV")]
        mcgowan: Option<f64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

/// Prefixes file-level errors with the path.
fn in_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        Error::Dataset(m) => Error::Dataset(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text).map_err(|e| in_file(e, p))?
        }
        None => RunConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(path: Option<&Path>) -> Result<DatasetSeries> {
    match path {
        Some(p) => {
            let file = File::open(p).map_err(|e| Error::Dataset(format!("{}: {e}", p.display())))?;
            load_dataset(file).map_err(|e| in_file(e, p))
        }
        None => load_dataset(BUNDLED_DATASET_CSV.as_bytes()),
    }
}

/// File `name` inside `out`, or stdout.
fn sink(out: Option<&Path>, name: &str) -> Result<Box<dyn Write>> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Box::new(BufWriter::new(File::create(dir.join(name))?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    if text.contains(':') {
        return parse_range(text);
    }
    text.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Domain(format!("grid value `{v}` is not a number"))))
        .collect()
}

fn steady(common: &Common, vary: Option<SweepVariable>, grid: Option<&str>, compound: Compound) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let geom = cfg.geometry()?;
    let mut params = match compound {
        Compound::Adjuvant => cfg.adjuvant_params(&geom)?,
        Compound::Active => cfg.active_params(&geom)?,
    };
    params.loss = 0.0;
    let (vary, grid) = match (vary, grid) {
        (Some(v), Some(g)) => (v, parse_grid(g)?),
        _ => (SweepVariable::Partition, vec![1.0 / params.k_in]),
    };
    let rows = steady_state_sweep(&geom, &params, vary, &grid)?;
    write_steady(&rows, sink(common.out.as_deref(), "steady.csv")?)
}

fn simulate_cmd(common: &Common) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let geom = cfg.geometry()?;
    let traj = simulate(
        &geom,
        &cfg.adjuvant_params(&geom)?,
        &cfg.active_params(&geom)?,
        &cfg.diffusion_model(),
        &cfg.solver_config()?,
    )?;
    let out = common.out.as_deref();
    write_trajectory(&traj, sink(out, "trajectory.csv")?)?;
    match out {
        Some(_) => write_profiles(&traj, sink(out, "profiles.csv")?),
        None => {
            eprintln!("note: profiles are only written with --out");
            Ok(())
        }
    }
}

fn estimate(common: &Common, data: Option<&Path>) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let data = load_data(data)?;
    let geom = cfg.geometry()?;
    let (aj, ai) = estimate_all(&data, &geom, (cfg.estimation.t_lag_min, cfg.estimation.t_lag_max))?;
    write_estimates(&[&aj, &ai], sink(common.out.as_deref(), "estimates.csv")?)
}

fn sweep(
    common: &Common,
    data: Option<&Path>,
    alpha: &str,
    sigma: &str,
    select: &[Compartment],
    jobs: usize,
) -> Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let data = load_data(data)?;
    let geom = cfg.geometry()?;
    let solver = cfg.solver_config()?;
    let bands = Bands::from_dataset(&data, Compound::Active, solver.t_end, select)?;
    let result = run_sweep(
        &geom,
        &cfg.adjuvant_params(&geom)?,
        &cfg.active_params(&geom)?,
        cfg.diffusion.D_Q0,
        &parse_range(alpha)?,
        &parse_range(sigma)?,
        &bands,
        &solver,
        Execution::Parallel { jobs },
    )?;
    let report = summarize_region(&result);
    let out = common.out.as_deref();
    write_sweep(&result, sink(out, "sweep.csv")?)?;
    match out {
        Some(_) => {
            let mut f = sink(out, "region.txt")?;
            write!(f, "{report}")?;
            f.flush()?;
            print!("{report}");
        }
        None => eprint!("{report}"),
    }
    Ok(())
}

fn empirical(logpow: Option<f64>, mcgowan: Option<f64>, out: Option<&Path>) -> Result<()> {
    if logpow.is_none() && mcgowan.is_none() {
        return Err(Error::Domain("give --logpow, --mcgowan or both".into()));
    }
    let rows = derived_table(logpow, mcgowan)?;
    let mut w = sink(out, "empirical.csv")?;
    writeln!(w, "quantity,input,value,unit")?;
    for r in rows {
        writeln!(w, "{},{},{:e},{}", r.quantity, r.input, r.value, r.unit)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Steady { common, vary, grid, compound } => steady(common, *vary, grid.as_deref(), *compound),
        Command::Simulate { common } => simulate_cmd(common),
        Command::Estimate { common, data } => estimate(common, data.as_deref()),
        Command::Sweep { common, data, alpha, sigma, bands, jobs } => {
            sweep(common, data.as_deref(), alpha, sigma, bands, *jobs)
        }
        Command::Empirical { logpow, mcgowan, out } => empirical(*logpow, *mcgowan, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { 2 } else { 1 })
        }
    }
}
