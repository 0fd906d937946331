//! Experiment driver: grids, initial data, time integration, errors and
//! output files for one (test, scheme, grid family, limiter) combination
//! over a range of levels.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::advection::{AdvectionOperator, AdvectionWorkspace, EdgeWindField, Scheme, SchemeKind};
use crate::error::{Error, Result};
use crate::grid::{build_icosahedral_grid, load_grid, lloyd_optimize, save_grid, DensityFunction, GridTopology, LloydOptions, MAX_LEVEL};
use crate::limiter::{fct_final_stage, FctBounds, FctWorkspace};
use crate::metrics::{mass_drift, relative_errors, ErrorReport, LevelResult};
use crate::testcases::{
    cell_means, exact_solid_body_solution, MeanRule, TracerSpec, WindSpec, DEFAULT_DEFORM_K, HILL_B, PERIOD,
    REFINED_HILL_CENTER, REFINED_PAIR_CENTERS, UNIFORM_HILL_CENTER, UNIFORM_PAIR_CENTERS,
};
use crate::timestepping::{choose_dt, rk3_step, rk3_step_with_final};
use crate::windrecon::{SamplePoint, WindReconstruction};

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($name), " {:?} (expected one of: {})"),
                        s,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(
    /// Benchmark test case.
    TestCase {
        ZonalHill => "zonal_hill",
        DeformHills => "deform_hills",
        DeformCylinders => "deform_cylinders",
    }
);

named_enum!(
    GridFamily {
        Uniform => "uniform",
        Refined => "refined",
    }
);

named_enum!(
    /// Where the flux-point winds come from.
    WindSource {
        Analytic => "analytic",
        EdgeNormalRecon => "edge-normal-recon",
    }
);

impl TestCase {
    pub fn wind(self, deform_k: f64) -> WindSpec {
        match self {
            TestCase::ZonalHill => WindSpec::ZonalSolidBody { period: PERIOD },
            _ => WindSpec::Deformational { period: PERIOD, k: deform_k },
        }
    }

    pub fn tracer(self, family: GridFamily) -> TracerSpec {
        let pair = match family {
            GridFamily::Uniform => UNIFORM_PAIR_CENTERS,
            GridFamily::Refined => REFINED_PAIR_CENTERS,
        };
        match self {
            TestCase::ZonalHill => TracerSpec::GaussianHill {
                center: match family {
                    GridFamily::Uniform => UNIFORM_HILL_CENTER,
                    GridFamily::Refined => REFINED_HILL_CENTER,
                },
                b: HILL_B,
            },
            TestCase::DeformHills => TracerSpec::TwoGaussianHills { centers: pair, b: HILL_B },
            TestCase::DeformCylinders => TracerSpec::slotted_cylinders(pair),
        }
    }

    /// SG3 upwind weight used when none is given.
    pub fn default_beta(self) -> f64 {
        match self {
            TestCase::DeformCylinders => 0.25,
            _ => 1.0,
        }
    }
}

impl GridFamily {
    pub fn density(self) -> DensityFunction {
        match self {
            GridFamily::Uniform => DensityFunction::Uniform,
            GridFamily::Refined => DensityFunction::synthetic_andes(),
        }
    }

    /// Uniform grids run Lloyd to 1e-10 (5000 sweeps at most); refined
    /// grids stop after 1000 sweeps because they stall short of 1e-10.
    pub fn lloyd_options(self, level: u32) -> LloydOptions {
        match self {
            GridFamily::Uniform => LloydOptions::for_level(level),
            GridFamily::Refined => LloydOptions {
                tol: 1e-10,
                max_iter: 1000,
            },
        }
    }
}

fn default_courant() -> f64 {
    0.6
}

fn default_k() -> f64 {
    DEFAULT_DEFORM_K
}

fn default_true() -> bool {
    true
}

/// Everything that defines one experiment. Unset optional fields take the
/// defaults documented on each field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub test: TestCase,
    pub scheme: SchemeKind,
    /// SG3 upwind weight; defaults to 1 for the hills and 0.25 for the cylinders.
    #[serde(default)]
    pub beta: Option<f64>,
    pub level_min: u32,
    pub level_max: u32,
    #[serde(default = "default_grid")]
    pub grid: GridFamily,
    #[serde(default)]
    pub limiter: bool,
    #[serde(default)]
    pub fct_bounds: FctBounds,
    #[serde(default = "default_courant")]
    pub courant: f64,
    #[serde(default = "default_wind_source")]
    pub wind_source: WindSource,
    #[serde(default)]
    pub sample_point: SamplePoint,
    #[serde(default = "default_k")]
    pub deform_k: f64,
    /// Initialize with generator values instead of cell means.
    #[serde(default)]
    pub point_init: bool,
    /// Output directory for the CSV table and snapshots (none: nothing is written).
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Write a field snapshot every this many steps (plus the first and last).
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Record the error after every step (zonal test only).
    #[serde(default)]
    pub track_error: bool,
    /// Record wall-clock runtimes (off makes the CSV reproducible byte for byte).
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Lloyd sweep cap; the family default when unset.
    #[serde(default)]
    pub lloyd_max_iter: Option<usize>,
}

fn default_grid() -> GridFamily {
    GridFamily::Uniform
}

fn default_wind_source() -> WindSource {
    WindSource::Analytic
}

impl ExperimentConfig {
    pub fn new(test: TestCase, scheme: SchemeKind, levels: std::ops::RangeInclusive<u32>) -> Self {
        ExperimentConfig {
            test,
            scheme,
            beta: None,
            level_min: *levels.start(),
            level_max: *levels.end(),
            grid: GridFamily::Uniform,
            limiter: false,
            fct_bounds: FctBounds::AllNeighbors,
            courant: default_courant(),
            wind_source: WindSource::Analytic,
            sample_point: SamplePoint::Midpoint,
            deform_k: DEFAULT_DEFORM_K,
            point_init: false,
            out_dir: None,
            snapshot_every: None,
            track_error: false,
            timing: true,
            lloyd_max_iter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.level_min > self.level_max {
            return Err(Error::Config(format!("empty level range {}..{}", self.level_min, self.level_max)));
        }
        if self.level_max > MAX_LEVEL {
            return Err(Error::LevelTooLarge {
                level: self.level_max,
                max: MAX_LEVEL,
            });
        }
        if !(self.courant > 0.0) {
            return Err(Error::Config(format!("courant must be positive, got {}", self.courant)));
        }
        if self.track_error && self.test != TestCase::ZonalHill {
            return Err(Error::Config("error tracking needs the zonal test's exact solution".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::Config("snapshot interval must be positive".into()));
        }
        self.scheme_spec().map(|_| ())
    }

    pub fn scheme_spec(&self) -> Result<Scheme> {
        Scheme::with_beta(self.scheme, self.beta.unwrap_or(self.test.default_beta()))
    }

    pub fn lloyd_options(&self, level: u32) -> LloydOptions {
        let mut o = self.grid.lloyd_options(level);
        if let Some(n) = self.lloyd_max_iter {
            o.max_iter = n;
        }
        o
    }

    fn mean_rule(&self, tracer: &TracerSpec) -> MeanRule {
        if self.point_init {
            MeanRule::Point
        } else if tracer.is_smooth() {
            MeanRule::Smooth
        } else {
            MeanRule::Subdivided
        }
    }

    /// File stem shared by every artifact of this experiment.
    pub fn stem(&self) -> String {
        format!(
            "{}_{}_{}_limiter-{}",
            self.test,
            self.scheme,
            self.grid,
            if self.limiter { "on" } else { "off" }
        )
    }
}

/// Lloyd-optimized grids keyed by family, level and Lloyd options, held in
/// memory and optionally mirrored to a directory.
#[derive(Debug, Default)]
pub struct GridCache {
    dir: Option<PathBuf>,
    grids: HashMap<String, Arc<GridTopology>>,
}

impl GridCache {
    pub fn in_memory() -> Self {
        GridCache::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        GridCache {
            dir: Some(dir.into()),
            grids: HashMap::new(),
        }
    }

    fn key(family: GridFamily, level: u32, opts: LloydOptions) -> String {
        format!("{family}-l{level}-tol{:e}-it{}", opts.tol, opts.max_iter)
    }

    pub fn get(&mut self, family: GridFamily, level: u32, opts: LloydOptions) -> Result<Arc<GridTopology>> {
        let key = Self::key(family, level, opts);
        if let Some(g) = self.grids.get(&key) {
            return Ok(g.clone());
        }
        let density = family.density();
        let path = self.dir.as_ref().map(|d| d.join(format!("{key}.grid")));
        let cached = match &path {
            Some(p) if p.exists() => match load_grid(p) {
                Ok(g) if g.density_tag == density.tag() && g.level == level => Some(g),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("ignoring unreadable cached grid {}: {e}", p.display());
                    None
                }
            },
            _ => None,
        };
        let grid = match cached {
            Some(g) => g,
            None => {
                log::info!("building {family} grid level {level}");
                let g = lloyd_optimize(build_icosahedral_grid(level)?, &density, opts)?;
                if let Some(p) = &path {
                    fs::create_dir_all(p.parent().expect("cache file has a parent"))?;
                    let tmp = p.with_extension(format!("tmp{}", std::process::id()));
                    save_grid(&g, &tmp)?;
                    fs::rename(&tmp, p)?;
                }
                g
            }
        };
        let grid = Arc::new(grid);
        self.grids.insert(key, grid.clone());
        Ok(grid)
    }
}

/// `(step, t, E_inf, E_2)`.
pub type ErrorSample = (usize, f64, f64, f64);

/// Full outcome of one level.
#[derive(Clone, Debug)]
pub struct LevelOutcome {
    pub result: LevelResult,
    pub initial: Vec<f64>,
    pub final_field: Vec<f64>,
    pub reference: Vec<f64>,
    pub error_series: Vec<ErrorSample>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: ErrorReport,
    pub levels: Vec<LevelOutcome>,
}

/// Produces the edge winds of one run.
enum WindSupply {
    Analytic,
    Reconstructed(WindReconstruction),
}

struct WindState<'a> {
    grid: &'a GridTopology,
    op: &'a AdvectionOperator,
    spec: WindSpec,
    supply: WindSupply,
    cache: Option<(f64, EdgeWindField)>,
}

impl WindState<'_> {
    fn at(&mut self, t: f64) -> &EdgeWindField {
        let t = if self.spec.is_time_dependent() { t } else { 0.0 };
        if self.cache.as_ref().is_none_or(|(ct, _)| *ct != t) {
            let field = match &self.supply {
                WindSupply::Analytic => EdgeWindField::analytic(self.grid, &self.op.quadrature, &self.spec, t),
                WindSupply::Reconstructed(r) => r.edge_wind(&r.sample(self.grid, &self.spec, t)),
            };
            self.cache = Some((t, field));
        }
        &self.cache.as_ref().expect("filled above").1
    }
}

/// Runs one level on a given grid.
pub fn run_level(config: &ExperimentConfig, grid: &GridTopology) -> Result<LevelOutcome> {
    let scheme = config.scheme_spec()?;
    let spec = config.test.wind(config.deform_k);
    let tracer = config.test.tracer(config.grid);
    let rule = config.mean_rule(&tracer);
    let start = Instant::now();

    let op = AdvectionOperator::new(grid, scheme)?;
    let supply = match config.wind_source {
        WindSource::Analytic => WindSupply::Analytic,
        WindSource::EdgeNormalRecon => {
            WindSupply::Reconstructed(WindReconstruction::new(grid, &op.quadrature, config.sample_point)?)
        }
    };
    let stepping = choose_dt(grid, &spec, config.courant)?;
    let (dt, steps) = (stepping.dt, stepping.steps);

    let initial = cell_means(grid, rule, |p| tracer.eval(p));
    let exact_at = |t: f64| -> Result<Vec<f64>> {
        match spec {
            WindSpec::ZonalSolidBody { .. } => {
                exact_solid_body_solution(&tracer, &spec, t, &grid.cells[0].center)?;
                Ok(cell_means(grid, rule, |p| {
                    exact_solid_body_solution(&tracer, &spec, t, p).expect("zonal wind")
                }))
            }
            WindSpec::Deformational { period, .. } if t == period || t == 0.0 => Ok(initial.clone()),
            WindSpec::Deformational { .. } => Err(Error::UnsupportedWind),
        }
    };

    let wind = RefCell::new(WindState {
        grid,
        op: &op,
        spec,
        supply,
        cache: None,
    });
    let ws = RefCell::new(AdvectionWorkspace::default());
    let mut fct_ws = FctWorkspace::default();
    let rhs = |x: &[f64], t: f64, out: &mut [f64]| -> Result<()> {
        let mut w = wind.borrow_mut();
        let field = w.at(t);
        op.tendency_into(grid, x, field, &mut ws.borrow_mut(), out);
        Ok(())
    };

    let mass0 = grid.mass(&initial);
    let (mut lo, mut hi) = extrema(&initial);
    let mut drift: f64 = 0.0;
    let mut series = Vec::new();
    if config.track_error {
        let (a, b) = relative_errors(&initial, &exact_at(0.0)?, grid)?;
        series.push((0, 0.0, a, b));
    }
    let snap = |step: usize, field: &[f64]| -> Result<()> {
        if let (Some(dir), Some(_)) = (&config.out_dir, config.snapshot_every) {
            let name = format!("{}_l{}_step{:06}.csv", config.stem(), grid.level, step);
            dump_snapshot(field, grid, dir.join(name))?;
        }
        Ok(())
    };
    snap(0, &initial)?;

    let mut phi = initial.clone();
    for n in 0..steps {
        let t = n as f64 * dt;
        phi = if config.limiter {
            let wind_n = wind.borrow_mut().at(t).mid.clone();
            rk3_step_with_final(&phi, t, dt, rhs, |xn, half, th| {
                let mut w = ws.borrow_mut();
                op.edge_fluxes(grid, half, wind.borrow_mut().at(th), &mut w);
                fct_final_stage(grid, xn, &w.flux, &wind_n, dt, config.fct_bounds, &mut fct_ws)
            })?
        } else {
            rk3_step(&phi, t, dt, rhs)?
        };
        let (a, b) = extrema(&phi);
        lo = lo.min(a);
        hi = hi.max(b);
        drift = drift.max(mass_drift(mass0, grid.mass(&phi)));
        if config.track_error {
            let t1 = (n + 1) as f64 * dt;
            let (a, b) = relative_errors(&phi, &exact_at(t1)?, grid)?;
            series.push((n + 1, t1, a, b));
        }
        if let Some(every) = config.snapshot_every {
            if (n + 1) % every == 0 && n + 1 != steps {
                snap(n + 1, &phi)?;
            }
        }
    }
    snap(steps, &phi)?;

    let reference = exact_at(spec.period())?;
    let (e_inf, e_2) = relative_errors(&phi, &reference, grid)?;
    let runtime = start.elapsed().as_secs_f64();
    Ok(LevelOutcome {
        result: LevelResult {
            level: grid.level,
            ncells: grid.cell_count(),
            dt,
            steps,
            scheme: config.scheme.to_string(),
            limiter: if config.limiter { "on" } else { "off" }.into(),
            e_inf,
            e_2,
            rate_inf: None,
            rate_2: None,
            mass_drift: drift,
            min: lo,
            max: hi,
            runtime_s: config.timing.then_some(runtime),
        },
        initial,
        final_field: phi,
        reference,
        error_series: series,
    })
}

fn extrema(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Runs every level of the configuration and writes the artifacts.
pub fn run_experiment(config: &ExperimentConfig, cache: &mut GridCache) -> Result<ExperimentOutcome> {
    config.validate()?;
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut levels = Vec::new();
    for level in config.level_min..=config.level_max {
        let context = |e: Error| Error::Context {
            level,
            scheme: config.scheme.to_string(),
            source: Box::new(e),
        };
        let grid = cache.get(config.grid, level, config.lloyd_options(level)).map_err(context)?;
        let outcome = run_level(config, &grid).map_err(context)?;
        log::info!(
            "{} {} level {}: E_inf {:.3e} E_2 {:.3e}",
            config.test,
            config.scheme,
            level,
            outcome.result.e_inf,
            outcome.result.e_2
        );
        if let (Some(dir), true) = (&config.out_dir, config.track_error) {
            write_error_series(&outcome.error_series, dir.join(format!("{}_l{}_error.csv", config.stem(), level)))?;
        }
        levels.push(outcome);
    }
    let mut report = ErrorReport {
        rows: levels.iter().map(|l| l.result.clone()).collect(),
    };
    report.fill_rates();
    for (l, r) in levels.iter_mut().zip(&report.rows) {
        l.result = r.clone();
    }
    if let Some(dir) = &config.out_dir {
        report.write_csv(BufWriter::new(File::create(dir.join(format!("{}.csv", config.stem())))?))?;
    }
    Ok(ExperimentOutcome { report, levels })
}

/// Per-step error time series as CSV (`step,t,E_inf,E_2`).
pub fn write_error_series(series: &[ErrorSample], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["step", "t", "E_inf", "E_2"])?;
    for &(s, t, a, b) in series {
        w.write_record(&[s.to_string(), t.to_string(), a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `lon,lat,value` per cell (radians, 17 significant digits).
pub fn dump_snapshot(field: &[f64], grid: &GridTopology, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lon,lat,value")?;
    for (c, v) in grid.cells.iter().zip(field) {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", c.center.lon(), c.center.lat(), v)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot back as `(lon, lat, value)` rows.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Vec<[f64; 3]>> {
    let mut rows = Vec::new();
    for (k, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line != "lon,lat,value" {
                return Err(Error::Format(format!("unexpected snapshot header {line:?}")));
            }
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("row {k}: {e}"))))
            .collect::<Result<_>>()?;
        let [a, b, c] = vals[..] else {
            return Err(Error::Format(format!("row {k}: expected 3 columns")));
        };
        rows.push([a, b, c]);
    }
    Ok(rows)
}
