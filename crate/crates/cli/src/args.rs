//! Command-line grammar.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubepu::bench::TestFunction;
use cubepu::KernelFamily;

#[derive(Debug, Parser)]
#[command(name = "cubepu", version, about = "Partition-of-unity RBF interpolation on the unit cube")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the nodes and evaluate the interpolant at the --eval points.
    Fit(CommonArgs),
    /// Run one benchmark experiment and report errors and timings.
    Bench(CommonArgs),
    /// Sweep the shape parameter and report the RMSE curve.
    Sweep(CommonArgs),
    /// Run the same experiment with cube and exhaustive searching.
    CompareSearch(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Interpolation nodes: halton:<n>, grid:<side> or file:<path>.
    #[arg(long, default_value = "halton:4913")]
    pub nodes: PointSource,
    /// Subdomain centres: halton:<d>, grid:<side> (cell-centred, side³ centres) or file:<path>.
    #[arg(long)]
    pub centers: Option<PointSource>,
    /// Evaluation points: grid:<side> (vertex lattice), halton:<n> or file:<path>.
    #[arg(long, default_value = "grid:11")]
    pub eval: PointSource,
    /// Test function sampled at the nodes: f1 or f2.
    #[arg(long, default_value = "f1")]
    pub function: TestFunction,
    /// Kernel: g, m4 or w4.
    #[arg(long, default_value = "w4")]
    pub kernel: KernelFamily,
    /// Shape parameter; defaults to a good value for the kernel.
    #[arg(long, conflicts_with = "shape_range")]
    pub shape: Option<f64>,
    /// Equispaced shape values, min:max:count.
    #[arg(long)]
    pub shape_range: Option<ShapeRange>,
    /// Number of subdomains when centres are not given explicitly.
    #[arg(long)]
    pub subdomains: Option<usize>,
    /// Keep at most this many nearest nodes per subdomain.
    #[arg(long)]
    pub mmax: Option<usize>,
    /// Use exhaustive scans instead of the cube partition.
    #[arg(long)]
    pub no_cube: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointSource {
    Halton(usize),
    Grid(usize),
    File(PathBuf),
}

impl FromStr for PointSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected halton:<n>, grid:<side> or file:<path>, got `{s}`"))?;
        let count = || -> Result<usize, String> {
            match rest.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(format!("`{rest}` is not a positive integer")),
            }
        };
        match kind {
            "halton" => Ok(Self::Halton(count()?)),
            "grid" => Ok(Self::Grid(count()?)),
            "file" if !rest.is_empty() => Ok(Self::File(PathBuf::from(rest))),
            "file" => Err("file: needs a path".into()),
            _ => Err(format!("unknown point source `{kind}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl FromStr for ShapeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, count] = parts[..] else {
            return Err(format!("expected min:max:count, got `{s}`"));
        };
        let real = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        let range = Self {
            min: real(min)?,
            max: real(max)?,
            count: count.parse().map_err(|_| format!("`{count}` is not a count"))?,
        };
        if !(range.min > 0.0 && range.min <= range.max && range.max.is_finite() && range.count >= 1) {
            return Err(format!("`{s}` needs 0 < min <= max and count >= 1"));
        }
        Ok(range)
    }
}

/// Shape used when neither --shape nor --shape-range is given.
pub fn default_shape(kernel: KernelFamily) -> f64 {
    match kernel {
        KernelFamily::Gaussian => 2.7,
        KernelFamily::Matern4 => 2.6,
        KernelFamily::Wendland4 => 0.54,
    }
}

/// Sweep range used when --shape-range is absent.
pub fn default_range(kernel: KernelFamily) -> ShapeRange {
    match kernel {
        KernelFamily::Wendland4 => ShapeRange { min: 0.1, max: 1.9, count: 19 },
        _ => ShapeRange { min: 1.0, max: 10.0, count: 19 },
    }
}

/// `d = ((∛n − 1)/2)³`, which gives 512, 4096, 32768 for n = 17³, 33³, 65³.
pub fn default_subdomains(n: usize) -> usize {
    let side = (n as f64).cbrt().round() as usize;
    let k = side.saturating_sub(1) / 2;
    (k * k * k).max(1)
}
