//! Command-line front end for `cubepu`: fitting, benchmarks, shape sweeps
//! and search comparisons.

pub mod args;
pub mod io;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};

use clap::Parser;
use cubepu::bench::{run_experiment, sweep_shape, EvalSource, ExperimentResult, ExperimentSpec, NodeSource};
use cubepu::geometry::vertex_lattice;
use cubepu::halton::{generate, HaltonConfig};
use cubepu::pu::subdomain_radius;
use cubepu::{CenterSource, DataSite, KernelSpec, Point3, PuConfig, PuModel, SearchMode};

use crate::args::{default_range, default_shape, default_subdomains, Cli, Command, CommonArgs, Format, PointSource};
use crate::io::{read_points, PointFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Input(_) | Self::Output(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<cubepu::Error> for CliError {
    fn from(e: cubepu::Error) -> Self {
        use cubepu::Error as E;
        match e {
            E::SingularSystem { .. } | E::EmptySubdomain { .. } | E::Uncovered { .. } => Self::Numerical(e.to_string()),
            E::OutOfDomain { .. } | E::NonFinite { .. } => Self::Input(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Fit(a) => fit(a, out, err),
        Command::Bench(a) => bench(a, out, err),
        Command::Sweep(a) => sweep(a, out, err),
        Command::CompareSearch(a) => compare(a, out, err),
    }
}

fn load(path: &std::path::Path) -> Result<PointFile, CliError> {
    read_points(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn resolve_points(source: &PointSource) -> Result<PointFile, CliError> {
    Ok(match source {
        PointSource::Halton(n) => PointFile::Points(generate(&HaltonConfig::new(*n))?),
        PointSource::Grid(side) => PointFile::Points(vertex_lattice(*side)),
        PointSource::File(path) => load(path)?,
    })
}

fn positions_only(source: &PointSource, what: &str) -> Result<Vec<Point3>, CliError> {
    match resolve_points(source)? {
        PointFile::Points(p) => Ok(p),
        PointFile::Sites(_) => Err(CliError::Input(format!(
            "{what} file must have 3 columns; values come from the test function"
        ))),
    }
}

fn centers(a: &CommonArgs, n: usize) -> Result<(CenterSource, usize), CliError> {
    let (source, d) = match &a.centers {
        None => {
            let d = a.subdomains.unwrap_or_else(|| default_subdomains(n));
            return Ok((CenterSource::Halton, d));
        }
        Some(PointSource::Halton(d)) => (CenterSource::Halton, *d),
        Some(PointSource::Grid(side)) => (CenterSource::Grid, side.pow(3)),
        Some(src @ PointSource::File(_)) => {
            let list = positions_only(src, "centre")?;
            let d = list.len();
            (CenterSource::Explicit(list), d)
        }
    };
    match a.subdomains {
        Some(s) if s != d => Err(CliError::Usage(format!(
            "--subdomains {s} disagrees with the {d} centres from --centers"
        ))),
        _ => Ok((source, d)),
    }
}

fn single_shape(a: &CommonArgs) -> Result<f64, CliError> {
    if a.shape_range.is_some() {
        return Err(CliError::Usage("this command takes --shape, not --shape-range".into()));
    }
    Ok(a.shape.unwrap_or_else(|| default_shape(a.kernel)))
}

fn search_mode(a: &CommonArgs) -> SearchMode {
    if a.no_cube {
        SearchMode::NoCube
    } else {
        SearchMode::Cube
    }
}

fn open_output<'a>(a: &CommonArgs, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match &a.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

fn report_grid(err: &mut dyn Write, r: &ExperimentResult) -> std::io::Result<()> {
    writeln!(err, "q = {} (ceiling convention), search grid q = {}", r.q, r.q_grid)
}

fn experiment_spec(a: &CommonArgs) -> Result<ExperimentSpec<f64>, CliError> {
    let nodes = match &a.nodes {
        PointSource::Halton(n) => NodeSource::halton(*n),
        src => NodeSource::Explicit(positions_only(src, "node")?),
    };
    let eval = match &a.eval {
        PointSource::Grid(side) => EvalSource::Lattice(*side),
        src => EvalSource::Explicit(resolve_points(src)?.positions()),
    };
    let (centers, d) = centers(a, nodes.count())?;
    let mut spec = ExperimentSpec::new(nodes.count(), d, a.kernel, default_shape(a.kernel), a.function)
        .with_m_max(a.mmax)
        .with_search(search_mode(a));
    spec.nodes = nodes;
    spec.centers = centers;
    spec.eval = eval;
    Ok(spec)
}

fn fit(a: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let sites: Vec<DataSite> = match resolve_points(&a.nodes)? {
        PointFile::Sites(s) => s,
        PointFile::Points(p) => p.into_iter().map(|p| DataSite::new(p, a.function.eval(&p))).collect(),
    };
    let eval = resolve_points(&a.eval)?.positions();
    let (centers, d) = centers(a, sites.len())?;
    let kernel = KernelSpec::new(a.kernel, single_shape(a)?)?;
    let config = PuConfig::new(kernel, d)
        .with_centers(centers)
        .with_m_max(a.mmax)
        .with_search(search_mode(a));
    let model = PuModel::fit(sites, config)?;
    let (values, report) = model.evaluate_batch_report(&eval)?;
    writeln!(
        err,
        "{} nodes, {d} subdomains of radius {:.6}, {} evaluation points",
        model.nodes().len(),
        subdomain_radius::<f64>(d),
        eval.len()
    )?;
    warn(err, report.uncovered, model.ill_conditioned_count(), model.geometry().empty_count())?;
    let mut w = open_output(a, out)?;
    match a.format {
        Format::Csv => io::write_values_csv(&mut w, &eval, &values)?,
        Format::Json => io::write_values_json(&mut w, &eval, &values)?,
    }
    w.flush()?;
    Ok(())
}

fn warn(err: &mut dyn Write, uncovered: usize, ill: usize, empty: usize) -> std::io::Result<()> {
    if uncovered > 0 {
        writeln!(err, "warning: {uncovered} points outside every subdomain used the nearest one")?;
    }
    if ill > 0 {
        writeln!(err, "warning: {ill} local systems are ill-conditioned")?;
    }
    if empty > 0 {
        writeln!(err, "warning: {empty} subdomains are empty")?;
    }
    Ok(())
}

fn write_results(a: &CommonArgs, out: &mut dyn Write, results: &[ExperimentResult]) -> Result<(), CliError> {
    let mut w = open_output(a, out)?;
    match a.format {
        Format::Csv => io::write_results_csv(&mut w, results)?,
        Format::Json => io::write_results_json(&mut w, results)?,
    }
    w.flush()?;
    Ok(())
}

fn bench(a: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = experiment_spec(a)?;
    spec.shape = cubepu::bench::ShapeSetting::Single(single_shape(a)?);
    let r = run_experiment(&spec)?;
    report_grid(err, &r)?;
    warn(err, r.warnings.uncovered, r.warnings.ill_conditioned, r.warnings.empty)?;
    write_results(a, out, &[r])
}

fn sweep(a: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let spec = experiment_spec(a)?.with_parallel(true);
    let spec = match (a.shape, a.shape_range) {
        (Some(s), _) => spec.with_shape_range(s, s, 1),
        (None, Some(r)) => spec.with_shape_range(r.min, r.max, r.count),
        (None, None) => {
            let r = default_range(a.kernel);
            spec.with_shape_range(r.min, r.max, r.count)
        }
    };
    let result = sweep_shape(&spec)?;
    if let Some(r) = result.results.iter().flatten().next() {
        report_grid(err, r)?;
    }
    let failed = result.results.iter().filter(|r| r.is_none()).count();
    if failed > 0 {
        writeln!(err, "warning: {failed} shape values failed to fit")?;
    }
    writeln!(err, "best shape {} with rmse {:e}", result.best.0, result.best.1)?;
    let mut w = open_output(a, out)?;
    match a.format {
        Format::Csv => io::write_curve_csv(&mut w, &result.curve)?,
        Format::Json => io::write_curve_json(&mut w, &result.curve, result.best)?,
    }
    w.flush()?;
    Ok(())
}

fn compare(a: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if a.no_cube {
        return Err(CliError::Usage("compare-search runs both modes; drop --no-cube".into()));
    }
    let mut spec = experiment_spec(a)?;
    spec.shape = cubepu::bench::ShapeSetting::Single(single_shape(a)?);
    let cube = run_experiment(&spec.clone().with_search(SearchMode::Cube))?;
    let exhaustive = run_experiment(&spec.with_search(SearchMode::NoCube))?;
    report_grid(err, &cube)?;
    let identical = cube.rmse.to_bits() == exhaustive.rmse.to_bits();
    writeln!(
        err,
        "rmse identical: {identical}; t_cube {:.3}s, t_no_cube {:.3}s, speedup {:.2}",
        cube.total_s,
        exhaustive.total_s,
        exhaustive.total_s / cube.total_s
    )?;
    write_results(a, out, &[cube, exhaustive])?;
    if identical {
        Ok(())
    } else {
        Err(CliError::Numerical("cube and exhaustive searches disagree".into()))
    }
}
