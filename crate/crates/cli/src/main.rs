use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use sphfv::advection::SchemeKind;
use sphfv::experiments::{run_experiment, ExperimentConfig, GridCache, GridFamily, TestCase, WindSource};
use sphfv::grid::{build_icosahedral_grid, lloyd_optimize, save_grid};
use sphfv::limiter::FctBounds;
use sphfv::metrics::ErrorReport;
use sphfv::windrecon::SamplePoint;
use sphfv::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "sphfv", version, about = "Finite-volume tracer advection on spherical Voronoi grids")]
struct Cli {
    /// Worker threads for the inner kernels (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one test case for one or more schemes over a level range.
    Run(RunArgs),
    /// Build a Lloyd-optimized grid and save it.
    Grid(GridArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file with run settings; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// zonal_hill, deform_hills or deform_cylinders.
    #[arg(long)]
    test: Option<String>,
    /// Comma-separated schemes (SG2, SG3, SG4, OG2, OG3, OG4) or "all".
    #[arg(long)]
    scheme: Option<String>,
    /// SG3 upwind weight [default: 1 for hills, 0.25 for cylinders].
    #[arg(long)]
    beta: Option<f64>,
    /// Level range, `3..5` or a single level [default: 3..5].
    #[arg(long)]
    levels: Option<String>,
    /// uniform or refined [default: uniform].
    #[arg(long)]
    grid: Option<String>,
    /// FCT limiter [default: off].
    #[arg(long, value_enum)]
    limiter: Option<OnOff>,
    /// Bounds of the limiter: all (every neighbor) or upwind [default: all].
    #[arg(long)]
    fct_bounds: Option<String>,
    /// Courant number [default: 0.6].
    #[arg(long)]
    courant: Option<f64>,
    /// analytic or edge-normal-recon [default: analytic].
    #[arg(long)]
    wind_source: Option<String>,
    /// Edge sample point for the wind reconstruction: midpoint or crossing [default: midpoint].
    #[arg(long)]
    sample_point: Option<String>,
    /// Deformational flow amplitude [default: 2].
    #[arg(long)]
    deform_k: Option<f64>,
    /// Output directory for CSV tables and snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a snapshot every N steps (needs --out).
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Record the error after every step (zonal_hill only).
    #[arg(long)]
    track_error: bool,
    /// Leave runtime_s empty so the CSV is reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Initialize with point values at the generators instead of cell means.
    #[arg(long)]
    point_init: bool,
    /// Directory for cached grids [default: <out>/grids when --out is given].
    #[arg(long)]
    grid_cache: Option<PathBuf>,
    /// Lloyd sweep cap [default: 5000 uniform, 1000 refined].
    #[arg(long)]
    lloyd_max_iter: Option<usize>,
}

/// Same settings as `RunArgs`, read from a file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    test: Option<String>,
    scheme: Option<String>,
    beta: Option<f64>,
    levels: Option<String>,
    grid: Option<String>,
    limiter: Option<OnOff>,
    fct_bounds: Option<String>,
    courant: Option<f64>,
    wind_source: Option<String>,
    sample_point: Option<String>,
    deform_k: Option<f64>,
    out: Option<PathBuf>,
    snapshot_every: Option<usize>,
    track_error: Option<bool>,
    timing: Option<bool>,
    point_init: Option<bool>,
    grid_cache: Option<PathBuf>,
    lloyd_max_iter: Option<usize>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    level: u32,
    #[arg(long, default_value = "uniform")]
    grid: String,
    #[arg(long)]
    lloyd_max_iter: Option<usize>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

fn parse_levels(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::Config(format!("bad level range {s:?} (expected e.g. 3..5)"));
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    match s.split_once("..") {
        Some((a, b)) => Ok((num(a)?, num(b.trim_start_matches('='))?)),
        None => {
            let l = num(s)?;
            Ok((l, l))
        }
    }
}

fn parse_schemes(s: &str) -> Result<Vec<SchemeKind>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(SchemeKind::ALL.to_vec());
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

fn parse_opt<T: std::str::FromStr<Err = Error>>(v: Option<String>) -> Result<Option<T>> {
    v.map(|s| s.parse()).transpose()
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Flag values over file values over defaults; one config per scheme.
fn build_configs(args: RunArgs) -> Result<(Vec<ExperimentConfig>, Option<PathBuf>)> {
    let file = match &args.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    let test: TestCase = parse_opt(args.test.or(file.test))?
        .ok_or_else(|| Error::Config("--test is required".into()))?;
    let schemes = parse_schemes(
        &args
            .scheme
            .or(file.scheme)
            .ok_or_else(|| Error::Config("--scheme is required".into()))?,
    )?;
    let (lo, hi) = parse_levels(args.levels.or(file.levels).as_deref().unwrap_or("3..5"))?;
    let out = args.out.or(file.out);
    let grid_cache = args.grid_cache.or(file.grid_cache).or_else(|| out.as_ref().map(|o| o.join("grids")));

    let mut base = ExperimentConfig::new(test, SchemeKind::Og2, lo..=hi);
    base.beta = args.beta.or(file.beta);
    if let Some(g) = parse_opt::<GridFamily>(args.grid.or(file.grid))? {
        base.grid = g;
    }
    base.limiter = args.limiter.or(file.limiter) == Some(OnOff::On);
    if let Some(b) = parse_opt::<FctBounds>(args.fct_bounds.or(file.fct_bounds))? {
        base.fct_bounds = b;
    }
    if let Some(c) = args.courant.or(file.courant) {
        base.courant = c;
    }
    if let Some(w) = parse_opt::<WindSource>(args.wind_source.or(file.wind_source))? {
        base.wind_source = w;
    }
    if let Some(s) = parse_opt::<SamplePoint>(args.sample_point.or(file.sample_point))? {
        base.sample_point = s;
    }
    if let Some(k) = args.deform_k.or(file.deform_k) {
        base.deform_k = k;
    }
    base.out_dir = out;
    base.snapshot_every = args.snapshot_every.or(file.snapshot_every);
    base.track_error = args.track_error || file.track_error.unwrap_or(false);
    base.timing = !args.no_timing && file.timing.unwrap_or(true);
    base.point_init = args.point_init || file.point_init.unwrap_or(false);
    base.lloyd_max_iter = args.lloyd_max_iter.or(file.lloyd_max_iter);
    if base.snapshot_every.is_some() && base.out_dir.is_none() {
        return Err(Error::Config("--snapshot-every needs --out".into()));
    }

    let configs = schemes
        .into_iter()
        .map(|scheme| {
            let c = ExperimentConfig { scheme, ..base.clone() };
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;
    Ok((configs, grid_cache))
}

fn run(args: RunArgs) -> Result<()> {
    let (configs, cache_dir) = build_configs(args)?;
    let mut cache = match cache_dir {
        Some(d) => GridCache::with_dir(d),
        None => GridCache::in_memory(),
    };
    let mut all = ErrorReport::default();
    for config in &configs {
        let outcome = run_experiment(config, &mut cache)?;
        all.rows.extend(outcome.report.rows);
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    lock.write_all(all.to_csv_string()?.as_bytes())?;
    Ok(())
}

fn grid(args: GridArgs) -> Result<()> {
    let family: GridFamily = args.grid.parse()?;
    let mut opts = family.lloyd_options(args.level);
    if let Some(n) = args.lloyd_max_iter {
        opts.max_iter = n;
    }
    let g = lloyd_optimize(build_icosahedral_grid(args.level)?, &family.density(), opts)?;
    save_grid(&g, &args.out)?;
    let report = g.lloyd.as_ref();
    println!(
        "level {} cells {} edges {} pentagons {} area {:.15} lloyd_iterations {} converged {}",
        g.level,
        g.cell_count(),
        g.edge_count(),
        g.count_cells_with_sides(5),
        g.total_area(),
        report.map_or(0, |r| r.iterations),
        report.is_some_and(|r| r.converged)
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Grid(a) => grid(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
