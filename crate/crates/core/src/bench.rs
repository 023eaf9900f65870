//! Benchmark harness: test functions, error metrics, experiments and
//! shape-parameter sweeps.

use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cube_index::{ceiling_cells_per_axis, GridParams, SearchMode};
use crate::error::{Error, Result};
use crate::geometry::{vertex_lattice, DataSite, Point3};
use crate::halton::{self, HaltonConfig};
use crate::pu::{subdomain_radius, CenterSource, EmptyPolicy, PuConfig, PuGeometry, PuModel};
use crate::rbf::{KernelFamily, KernelSpec};
use crate::scalar::Real;

/// Trivariate Franke-type function with four Gaussian bumps.
///
/// The second term uses linear `(9y+1)/10` and `(9z+1)/10` arguments.
pub fn f1<T: Real>(p: &Point3<T>) -> T {
    let l = T::lit;
    let (x9, y9, z9) = (l(9.0) * p.x, l(9.0) * p.y, l(9.0) * p.z);
    let sq = |v: T| v * v;
    let t1 = l(0.75) * (-(sq(x9 - l(2.0)) + sq(y9 - l(2.0)) + sq(z9 - l(2.0))) / l(4.0)).exp();
    let t2 = l(0.75) * (-sq(x9 + l(1.0)) / l(49.0) - (y9 + l(1.0)) / l(10.0) - (z9 + l(1.0)) / l(10.0)).exp();
    let t3 = l(0.5) * (-(sq(x9 - l(7.0)) + sq(y9 - l(3.0)) + sq(z9 - l(5.0))) / l(4.0)).exp();
    let t4 = l(0.2) * (-sq(x9 - l(4.0)) - sq(y9 - l(7.0)) - sq(z9 - l(5.0))).exp();
    t1 + t2 + t3 - t4
}

/// `(1.25 + cos 5.4y) cos 6z / (6 + 6(3x − 1)²)`.
pub fn f2<T: Real>(p: &Point3<T>) -> T {
    let l = T::lit;
    let s = l(3.0) * p.x - l(1.0);
    (l(1.25) + (l(5.4) * p.y).cos()) * (l(6.0) * p.z).cos() / (l(6.0) + l(6.0) * s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum TestFunction {
    #[default]
    F1,
    F2,
}

impl TestFunction {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
        }
    }

    pub fn eval<T: Real>(&self, p: &Point3<T>) -> T {
        match self {
            Self::F1 => f1(p),
            Self::F2 => f2(p),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            _ => Err(Error::InvalidConfig(format!("unknown test function `{s}`"))),
        }
    }
}

fn check_lengths<T>(truth: &[T], approx: &[T]) -> Result<()> {
    if truth.len() != approx.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: approx.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidConfig("error metrics need at least one value".into()));
    }
    Ok(())
}

/// Root mean square of `truth − approx`.
pub fn rmse<T: Real>(truth: &[T], approx: &[T]) -> Result<T> {
    check_lengths(truth, approx)?;
    let sum: T = truth.iter().zip(approx).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sum / T::from_usize_lossy(truth.len())).sqrt())
}

pub fn max_abs_error<T: Real>(truth: &[T], approx: &[T]) -> Result<T> {
    check_lengths(truth, approx)?;
    Ok(truth
        .iter()
        .zip(approx)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
}

/// Either one shape value or `count` equispaced values in `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeSetting<T> {
    Single(T),
    Range { min: T, max: T, count: usize },
}

impl<T: Real> ShapeSetting<T> {
    pub fn values(&self) -> Vec<T> {
        match *self {
            Self::Single(v) => vec![v],
            Self::Range { min, count: 1, .. } => vec![min],
            Self::Range { min, max, count } => {
                let steps = T::from_usize_lossy(count - 1);
                (0..count)
                    .map(|i| {
                        if i + 1 == count {
                            max
                        } else {
                            min + (max - min) * T::from_usize_lossy(i) / steps
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Single(v) => v > T::zero() && v.is_finite(),
            Self::Range { min, max, count } => {
                count >= 1 && min > T::zero() && max.is_finite() && min <= max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid shape setting {self:?}")))
        }
    }
}

/// Where interpolation nodes come from.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSource<T> {
    Halton { count: usize, start_index: u64 },
    Explicit(Vec<Point3<T>>),
}

impl<T: Real> NodeSource<T> {
    pub fn halton(count: usize) -> Self {
        Self::Halton { count, start_index: 1 }
    }

    pub fn count(&self) -> usize {
        match self {
            Self::Halton { count, .. } => *count,
            Self::Explicit(p) => p.len(),
        }
    }

    pub fn points(&self) -> Result<Vec<Point3<T>>> {
        match self {
            Self::Halton { count, start_index } => {
                halton::generate(&HaltonConfig::new(*count).with_start_index(*start_index))
            }
            Self::Explicit(p) => Ok(p.clone()),
        }
    }
}

/// Where error-measuring evaluation points come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalSource<T> {
    /// Vertex lattice `{i/(side−1)}³`.
    Lattice(usize),
    Explicit(Vec<Point3<T>>),
}

impl<T: Real> EvalSource<T> {
    pub fn points(&self) -> Vec<Point3<T>> {
        match self {
            Self::Lattice(side) => vertex_lattice(*side),
            Self::Explicit(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec<T> {
    pub nodes: NodeSource<T>,
    pub subdomain_count: usize,
    pub centers: CenterSource<T>,
    pub eval: EvalSource<T>,
    pub kernel: KernelFamily,
    pub shape: ShapeSetting<T>,
    pub function: TestFunction,
    pub m_max: Option<usize>,
    pub search: SearchMode,
    pub empty: EmptyPolicy,
    /// Parallel local solves and evaluation. Off by default so timings are serial.
    pub parallel: bool,
}

impl<T: Real> ExperimentSpec<T> {
    /// Halton nodes, Halton centres, 11³ evaluation lattice, serial, cube search.
    pub fn new(n: usize, d: usize, kernel: KernelFamily, shape: T, function: TestFunction) -> Self {
        Self {
            nodes: NodeSource::halton(n),
            subdomain_count: d,
            centers: CenterSource::Halton,
            eval: EvalSource::Lattice(11),
            kernel,
            shape: ShapeSetting::Single(shape),
            function,
            m_max: None,
            search: SearchMode::Cube,
            empty: EmptyPolicy::Error,
            parallel: false,
        }
    }

    pub fn with_shape_range(mut self, min: T, max: T, count: usize) -> Self {
        self.shape = ShapeSetting::Range { min, max, count };
        self
    }

    pub fn with_m_max(mut self, m_max: Option<usize>) -> Self {
        self.m_max = m_max;
        self
    }

    pub fn with_search(mut self, search: SearchMode) -> Self {
        self.search = search;
        self
    }

    pub fn with_grid_side(mut self, side: usize) -> Self {
        self.eval = EvalSource::Lattice(side);
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if self.nodes.count() == 0 {
            return Err(Error::InvalidConfig("node count must be positive".into()));
        }
        if self.subdomain_count == 0 {
            return Err(Error::InvalidConfig("subdomain count must be positive".into()));
        }
        match &self.eval {
            EvalSource::Lattice(side) if *side < 2 => {
                Err(Error::InvalidConfig("evaluation grid side must be at least 2".into()))
            }
            EvalSource::Explicit(p) if p.is_empty() => {
                Err(Error::InvalidConfig("no evaluation points".into()))
            }
            _ => Ok(()),
        }
    }

    fn pu_config(&self, shape: T) -> Result<PuConfig<T>> {
        let config = PuConfig::new(KernelSpec::new(self.kernel, shape)?, self.subdomain_count)
            .with_centers(self.centers.clone())
            .with_m_max(self.m_max)
            .with_search(self.search)
            .with_empty_policy(self.empty)
            .with_parallel(self.parallel);
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Warnings {
    pub uncovered: usize,
    pub ill_conditioned: usize,
    pub empty: usize,
}

/// One row of benchmark output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub n: usize,
    pub d: usize,
    /// Cells per axis under the ceiling convention `⌈1/δ⌉`.
    pub q: usize,
    /// Cells per axis actually used by the search grid.
    pub q_grid: usize,
    pub kernel: &'static str,
    pub shape: f64,
    pub function: &'static str,
    pub mmax: Option<usize>,
    pub mode: &'static str,
    pub rmse: f64,
    pub max_err: f64,
    pub fit_s: f64,
    pub eval_s: f64,
    pub total_s: f64,
    pub warnings: Warnings,
}

/// Kernel-independent state shared by every shape value of an experiment.
struct Prepared<T> {
    geometry: Arc<PuGeometry<T>>,
    geometry_seconds: f64,
    eval_points: Vec<Point3<T>>,
    truth: Vec<T>,
    q: usize,
    q_grid: usize,
}

fn prepare<T: Real>(spec: &ExperimentSpec<T>) -> Result<Prepared<T>> {
    spec.validate()?;
    let first = spec.shape.values()[0];
    let config = spec.pu_config(first)?;
    let nodes: Vec<DataSite<T>> = spec
        .nodes
        .points()?
        .into_iter()
        .map(|p| DataSite::new(p, spec.function.eval(&p)))
        .collect();
    let eval_points = spec.eval.points();
    let truth = eval_points.iter().map(|p| spec.function.eval(p)).collect();

    let start = Instant::now();
    let geometry = Arc::new(PuGeometry::build(nodes, &config)?);
    let geometry_seconds = start.elapsed().as_secs_f64();

    let d = geometry.subdomains().len();
    let radius = subdomain_radius::<T>(d);
    Ok(Prepared {
        geometry,
        geometry_seconds,
        eval_points,
        truth,
        q: ceiling_cells_per_axis(radius),
        q_grid: GridParams::from_radius(radius)?.q(),
    })
}

fn run_shape<T: Real>(spec: &ExperimentSpec<T>, prep: &Prepared<T>, shape: T) -> Result<ExperimentResult> {
    let config = spec.pu_config(shape)?;
    let start = Instant::now();
    let model = PuModel::from_geometry(Arc::clone(&prep.geometry), config)?;
    let fit_s = prep.geometry_seconds + start.elapsed().as_secs_f64();

    let start = Instant::now();
    let (approx, report) = model.evaluate_batch_report(&prep.eval_points)?;
    let eval_s = start.elapsed().as_secs_f64();

    Ok(ExperimentResult {
        n: prep.geometry.nodes().len(),
        d: prep.geometry.subdomains().len(),
        q: prep.q,
        q_grid: prep.q_grid,
        kernel: spec.kernel.tag(),
        shape: shape.as_f64(),
        function: spec.function.tag(),
        mmax: spec.m_max,
        mode: spec.search.as_str(),
        rmse: rmse(&prep.truth, &approx)?.as_f64(),
        max_err: max_abs_error(&prep.truth, &approx)?.as_f64(),
        fit_s,
        eval_s,
        total_s: fit_s + eval_s,
        warnings: Warnings {
            uncovered: report.uncovered,
            ill_conditioned: model.ill_conditioned_count(),
            empty: prep.geometry.empty_count(),
        },
    })
}

/// Fits and evaluates one configuration.
///
/// A shape range is rejected; use [`sweep_shape`] for that.
pub fn run_experiment<T: Real>(spec: &ExperimentSpec<T>) -> Result<ExperimentResult> {
    let ShapeSetting::Single(shape) = spec.shape else {
        return Err(Error::InvalidConfig("run_experiment needs a single shape value".into()));
    };
    let prep = prepare(spec)?;
    run_shape(spec, &prep, shape)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    /// `(shape, rmse)` in sweep order; `rmse = +∞` where the fit failed.
    pub curve: Vec<(T, f64)>,
    /// Full result per shape; `None` where the fit failed.
    pub results: Vec<Option<ExperimentResult>>,
    /// First minimizer of the curve.
    pub best: (T, f64),
}

/// Runs the experiment at every shape of `spec.shape` on one shared geometry.
pub fn sweep_shape<T: Real>(spec: &ExperimentSpec<T>) -> Result<SweepResult<T>> {
    let prep = prepare(spec)?;
    let shapes = spec.shape.values();
    let run = |&shape: &T| -> Result<Option<ExperimentResult>> {
        match run_shape(spec, &prep, shape) {
            Ok(r) => Ok(Some(r)),
            Err(Error::SingularSystem { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let results: Vec<Option<ExperimentResult>> = if spec.parallel {
        shapes.par_iter().map(run).collect::<Result<_>>()?
    } else {
        shapes.iter().map(run).collect::<Result<_>>()?
    };
    let curve: Vec<(T, f64)> = shapes
        .iter()
        .zip(&results)
        .map(|(&s, r)| (s, r.as_ref().map_or(f64::INFINITY, |r| r.rmse)))
        .collect();
    let best = curve
        .iter()
        .copied()
        .fold(curve[0], |b, c| if c.1 < b.1 { c } else { b });
    Ok(SweepResult { curve, results, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Direct transcription of the printed formula in plain f64 arithmetic.
    fn f1_oracle(x: f64, y: f64, z: f64) -> f64 {
        0.75 * (-((9.0 * x - 2.0).powi(2) + (9.0 * y - 2.0).powi(2) + (9.0 * z - 2.0).powi(2)) / 4.0).exp()
            + 0.75 * (-(9.0 * x + 1.0).powi(2) / 49.0 - (9.0 * y + 1.0) / 10.0 - (9.0 * z + 1.0) / 10.0).exp()
            + 0.5 * (-((9.0 * x - 7.0).powi(2) + (9.0 * y - 3.0).powi(2) + (9.0 * z - 5.0).powi(2)) / 4.0).exp()
            - 0.2 * (-(9.0 * x - 4.0).powi(2) - (9.0 * y - 7.0).powi(2) - (9.0 * z - 5.0).powi(2)).exp()
    }

    #[test]
    fn f1_examples() {
        let c = 2.0 / 9.0;
        let p = Point3::splat(c);
        let rest = 0.75 * (-(3.0f64).powi(2) / 49.0 - 0.3 - 0.3).exp()
            + 0.5 * (-(25.0 + 1.0 + 9.0) / 4.0f64).exp()
            - 0.2 * (-(4.0 + 25.0 + 9.0f64)).exp();
        assert_relative_eq!(f1(&p), 0.75 + rest, max_relative = 1e-14);

        let p = Point3::new(4.0 / 9.0, 7.0 / 9.0, 5.0 / 9.0);
        let first = 0.75 * (-(4.0 + 25.0 + 9.0) / 4.0f64).exp();
        let second = 0.75 * (-25.0 / 49.0 - 0.8 - 0.6f64).exp();
        let third = 0.5 * (-(9.0 + 16.0) / 4.0f64).exp();
        assert_relative_eq!(f1(&p), first + second + third - 0.2, max_relative = 1e-14);
    }

    #[test]
    fn f1_grid_scan() {
        for p in vertex_lattice::<f64>(21) {
            let v = f1(&p);
            assert!(v.is_finite() && v.abs() < 2.0);
            assert_relative_eq!(v, f1_oracle(p.x, p.y, p.z), max_relative = 1e-13, epsilon = 1e-15);
        }
    }

    #[test]
    fn f2_examples() {
        assert_relative_eq!(f2(&Point3::new(1.0 / 3.0, 0.0, 0.0)), 0.375, max_relative = 1e-15);
        assert!(f2(&Point3::new(1.0 / 3.0, 0.0, std::f64::consts::PI / 12.0)).abs() < 1e-15);
        for p in vertex_lattice::<f64>(21) {
            assert!(f2(&p).abs() <= 0.375 + 1e-15);
        }
    }

    #[test]
    fn test_function_tags() {
        assert_eq!("F2".parse::<TestFunction>().unwrap(), TestFunction::F2);
        assert!("f3".parse::<TestFunction>().is_err());
        assert_eq!(TestFunction::F1.tag(), "f1");
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0; 4], &[2.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(rmse(&[0.0; 3], &[0.0; 2]), Err(Error::LengthMismatch { expected: 3, actual: 2 })));
        assert!(rmse::<f64>(&[], &[]).is_err());
        assert_eq!(max_abs_error(&[0.0; 4], &[2.0, 0.0, -3.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn shape_ranges() {
        let v = ShapeSetting::Range { min: 1.0, max: 10.0, count: 19 }.values();
        assert_eq!(v.len(), 19);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 1.5);
        assert_eq!(v[18], 10.0);
        assert_eq!(ShapeSetting::Range { min: 2.0, max: 3.0, count: 1 }.values(), vec![2.0]);
        assert!(ShapeSetting::Range { min: -1.0, max: 3.0, count: 4 }.validate().is_err());
        assert!(ShapeSetting::Range { min: 3.0, max: 1.0, count: 4 }.validate().is_err());
        assert!(ShapeSetting::Range { min: 1.0, max: 3.0, count: 0 }.validate().is_err());
    }

    #[test]
    fn small_experiment() {
        let spec = ExperimentSpec::new(729, 64, KernelFamily::Wendland4, 0.6, TestFunction::F2).with_grid_side(6);
        let r = run_experiment(&spec).unwrap();
        assert_eq!((r.n, r.d, r.q, r.q_grid), (729, 64, 3, 2));
        assert!(r.rmse > 0.0 && r.rmse <= r.max_err);
        assert!(r.rmse < 1e-2);
        // Oracle: grid points farther than δ from every Halton centre.
        let centers = crate::pu::subdomain_centers::<f64>(&CenterSource::Halton, 64).unwrap();
        let delta = subdomain_radius::<f64>(64);
        let uncovered = vertex_lattice::<f64>(6)
            .iter()
            .filter(|p| centers.iter().all(|c| crate::geometry::distance(*p, c) > delta))
            .count();
        assert_eq!(r.warnings.uncovered, uncovered);
        assert_eq!((r.warnings.ill_conditioned, r.warnings.empty), (0, 0));
        assert!(r.total_s >= r.fit_s);
        let again = run_experiment(&spec).unwrap();
        assert_eq!(again.rmse.to_bits(), r.rmse.to_bits());
        let nc = run_experiment(&spec.clone().with_search(SearchMode::NoCube)).unwrap();
        assert_eq!(nc.rmse.to_bits(), r.rmse.to_bits());
        assert_eq!(nc.mode, "no_cube");
        assert!(run_experiment(&spec.clone().with_shape_range(0.5, 1.0, 3)).is_err());
        assert!(run_experiment(&spec.with_grid_side(1)).is_err());
    }

    #[test]
    fn single_point_sweep_matches_experiment() {
        let spec = ExperimentSpec::new(500, 27, KernelFamily::Matern4, 3.0, TestFunction::F1).with_grid_side(5);
        let one = run_experiment(&spec).unwrap();
        let sweep = sweep_shape(&spec).unwrap();
        assert_eq!(sweep.curve, vec![(3.0, one.rmse)]);
        assert_eq!(sweep.best, (3.0, one.rmse));
    }

    #[test]
    fn sweep_reports_minimum() {
        let spec = ExperimentSpec::new(500, 27, KernelFamily::Gaussian, 1.0, TestFunction::F1)
            .with_grid_side(5)
            .with_shape_range(1.0, 9.0, 5)
            .with_parallel(true);
        let sweep = sweep_shape(&spec).unwrap();
        assert_eq!(sweep.curve.len(), 5);
        let min = sweep.curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        assert_eq!(sweep.best.1, min);
        let serial = sweep_shape(&spec.with_parallel(false)).unwrap();
        assert_eq!(serial.curve, sweep.curve);
    }
}
