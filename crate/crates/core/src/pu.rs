//! Partition-of-unity interpolation.
//!
//! The unit cube is covered by `d` spherical subdomains of radius
//! `√2 / ∛d`. Each subdomain gathers the nodes inside it through a
//! [`RadiusSearch`], fits a local RBF interpolant to them, and the global
//! interpolant blends the local ones with Shepard weights restricted to the
//! subdomains that contain the evaluation point.
//!
//! Fitting is split in two phases: [`PuGeometry`] holds everything that does
//! not depend on the kernel (nodes, centres, search structures, captured node
//! lists), and [`PuGeometry::solve`] fits the local systems for one kernel.
//! Shape-parameter sweeps reuse one geometry for every kernel.

use std::sync::Arc;

use rayon::prelude::*;

use crate::cube_index::{RadiusSearch, SearchMode, Searcher};
use crate::error::{Error, Result};
use crate::geometry::{distance, squared_distance, DataSite, Point3, UnitCube};
use crate::halton::{self, HaltonConfig, CENTER_BASES};
use crate::rbf::{kernel_value, solve_positions, KernelSpec, LocalCoefficients};
use crate::scalar::Real;

/// Distances below this count as an evaluation point sitting on a centre.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-14;

/// Subdomain radius `√2 / ∛d`.
pub fn subdomain_radius<T: Real>(d: usize) -> T {
    assert!(d >= 1, "subdomain count must be positive");
    T::SQRT_2() / T::from_usize_lossy(d).cbrt()
}

/// Where subdomain centres come from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CenterSource<T> {
    /// First `d` Halton points in bases (7, 11, 13).
    #[default]
    Halton,
    /// First `d` points of the cell-centred `m³` lattice, `m = ⌈∛d⌉`, x fastest.
    Grid,
    /// Caller-supplied centres; `d` is the list length.
    Explicit(Vec<Point3<T>>),
}

/// Generates `d` centres from `source`.
pub fn subdomain_centers<T: Real>(source: &CenterSource<T>, d: usize) -> Result<Vec<Point3<T>>> {
    if d == 0 {
        return Err(Error::InvalidConfig("subdomain count must be positive".into()));
    }
    let centers = match source {
        CenterSource::Halton => halton::generate(&HaltonConfig::new(d).with_bases(CENTER_BASES))?,
        CenterSource::Grid => {
            let mut m = 1usize;
            while m * m * m < d {
                m += 1;
            }
            let mt = T::from_usize_lossy(m);
            let coord = |i: usize| (T::from_usize_lossy(i) + T::lit(0.5)) / mt;
            (0..d)
                .map(|k| Point3::new(coord(k % m), coord(k / m % m), coord(k / (m * m))))
                .collect()
        }
        CenterSource::Explicit(list) => {
            if list.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "{} explicit centres given for {d} subdomains",
                    list.len()
                )));
            }
            list.clone()
        }
    };
    let cube = UnitCube::unit();
    for c in &centers {
        cube.check(c)?;
    }
    Ok(centers)
}

/// What to do at a point no subdomain contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UncoveredPolicy {
    /// Use the subdomain with the nearest centre at weight 1 and count it.
    #[default]
    NearestSubdomain,
    Error,
}

/// What to do with a subdomain that captures no nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyPolicy {
    #[default]
    Error,
    /// Keep it inactive: it never takes part in evaluation.
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuConfig<T> {
    pub kernel: KernelSpec<T>,
    pub subdomain_count: usize,
    /// Keep only this many nodes nearest to each centre.
    pub m_max: Option<usize>,
    pub centers: CenterSource<T>,
    pub search: SearchMode,
    pub uncovered: UncoveredPolicy,
    pub empty: EmptyPolicy,
    /// Solve local systems and batch evaluations on the rayon pool.
    pub parallel: bool,
}

impl<T: Real> PuConfig<T> {
    pub fn new(kernel: KernelSpec<T>, subdomain_count: usize) -> Self {
        Self {
            kernel,
            subdomain_count,
            m_max: None,
            centers: CenterSource::Halton,
            search: SearchMode::Cube,
            uncovered: UncoveredPolicy::NearestSubdomain,
            empty: EmptyPolicy::Error,
            parallel: true,
        }
    }

    pub fn with_m_max(mut self, m_max: Option<usize>) -> Self {
        self.m_max = m_max;
        self
    }

    pub fn with_centers(mut self, centers: CenterSource<T>) -> Self {
        if let CenterSource::Explicit(list) = &centers {
            self.subdomain_count = list.len();
        }
        self.centers = centers;
        self
    }

    pub fn with_search(mut self, search: SearchMode) -> Self {
        self.search = search;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn with_empty_policy(mut self, empty: EmptyPolicy) -> Self {
        self.empty = empty;
        self
    }

    pub fn with_uncovered_policy(mut self, uncovered: UncoveredPolicy) -> Self {
        self.uncovered = uncovered;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.subdomain_count == 0 {
            return Err(Error::InvalidConfig("subdomain count must be positive".into()));
        }
        if self.m_max == Some(0) {
            return Err(Error::InvalidConfig("m_max must be positive".into()));
        }
        Ok(())
    }
}

/// A spherical patch and the nodes it captured.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain<T> {
    pub center: Point3<T>,
    pub radius: T,
    /// Captured node ids, ascending.
    pub node_ids: Vec<usize>,
}

impl<T: Real> Subdomain<T> {
    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

/// Kernel-independent part of a fitted model.
#[derive(Debug, Clone)]
pub struct PuGeometry<T> {
    nodes: Vec<DataSite<T>>,
    radius: T,
    subdomains: Vec<Subdomain<T>>,
    node_search: Searcher<T>,
    center_search: Searcher<T>,
    m_max: Option<usize>,
}

impl<T: Real> PuGeometry<T> {
    /// Builds search structures and captures every subdomain's nodes.
    ///
    /// Only the geometric fields of `config` are used; the kernel is ignored.
    pub fn build(nodes: Vec<DataSite<T>>, config: &PuConfig<T>) -> Result<Self> {
        config.validate()?;
        validate_nodes(&nodes)?;
        let d = match &config.centers {
            CenterSource::Explicit(list) => list.len(),
            _ => config.subdomain_count,
        };
        let centers = subdomain_centers(&config.centers, d)?;
        let radius = subdomain_radius::<T>(d);

        let positions: Vec<Point3<T>> = nodes.iter().map(|s| s.position).collect();
        let node_search = Searcher::build(positions, radius, config.search)?;
        let center_search = Searcher::build(centers.clone(), radius, config.search)?;

        let mut subdomains = Vec::with_capacity(d);
        let mut found = Vec::new();
        for (j, center) in centers.into_iter().enumerate() {
            node_search.radius_query_into(&center, radius, &mut found)?;
            if found.is_empty() && config.empty == EmptyPolicy::Error {
                return Err(Error::EmptySubdomain {
                    subdomain: j,
                    center: center.to_f64_array(),
                });
            }
            let mut node_ids = found.clone();
            if let Some(m) = config.m_max {
                keep_nearest(&mut node_ids, node_search.points(), &center, m);
            }
            subdomains.push(Subdomain {
                center,
                radius,
                node_ids,
            });
        }

        Ok(Self {
            nodes,
            radius,
            subdomains,
            node_search,
            center_search,
            m_max: config.m_max,
        })
    }

    pub fn nodes(&self) -> &[DataSite<T>] {
        &self.nodes
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn subdomains(&self) -> &[Subdomain<T>] {
        &self.subdomains
    }

    pub fn node_search(&self) -> &Searcher<T> {
        &self.node_search
    }

    pub fn center_search(&self) -> &Searcher<T> {
        &self.center_search
    }

    pub fn search_mode(&self) -> SearchMode {
        self.node_search.mode()
    }

    pub fn m_max(&self) -> Option<usize> {
        self.m_max
    }

    pub fn empty_count(&self) -> usize {
        self.subdomains.iter().filter(|s| s.is_empty()).count()
    }

    /// Fits every non-empty subdomain with `kernel`.
    pub fn solve(self: &Arc<Self>, kernel: KernelSpec<T>, parallel: bool) -> Result<Vec<Option<LocalCoefficients<T>>>> {
        let fit_one = |(j, sub): (usize, &Subdomain<T>)| -> Result<Option<LocalCoefficients<T>>> {
            if sub.is_empty() {
                return Ok(None);
            }
            let positions: Vec<Point3<T>> = sub.node_ids.iter().map(|&i| self.nodes[i].position).collect();
            let values: Vec<T> = sub.node_ids.iter().map(|&i| self.nodes[i].value).collect();
            solve_positions(&positions, &values, &kernel)
                .map(Some)
                .ok_or(Error::SingularSystem {
                    subdomain: j,
                    size: sub.node_ids.len(),
                })
        };
        if parallel {
            self.subdomains.par_iter().enumerate().map(fit_one).collect()
        } else {
            self.subdomains.iter().enumerate().map(fit_one).collect()
        }
    }
}

fn validate_nodes<T: Real>(nodes: &[DataSite<T>]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::InvalidConfig("at least one node is required".into()));
    }
    let cube = UnitCube::unit();
    for s in nodes {
        s.validate()?;
        cube.check(&s.position)?;
    }
    let mut keys: Vec<[u64; 3]> = nodes
        .iter()
        .map(|s| s.position.to_f64_array().map(|c| (c + 0.0).to_bits()))
        .collect();
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig(format!(
            "duplicate node at ({}, {}, {})",
            f64::from_bits(w[0][0]),
            f64::from_bits(w[0][1]),
            f64::from_bits(w[0][2])
        )));
    }
    Ok(())
}

/// Keeps the `m` ids nearest to `center` (ties to the lower id), ascending.
fn keep_nearest<T: Real>(ids: &mut Vec<usize>, points: &[Point3<T>], center: &Point3<T>, m: usize) {
    if ids.len() <= m {
        return;
    }
    let mut keyed: Vec<(T, usize)> = ids.iter().map(|&i| (squared_distance(&points[i], center), i)).collect();
    keyed.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
    keyed.truncate(m);
    *ids = keyed.into_iter().map(|(_, i)| i).collect();
    ids.sort_unstable();
}

/// Shepard weights `w_j ∝ 1/‖p − c_j‖` over `covering`, normalized to 1.
///
/// If `p` coincides with one or more covering centres, those share the weight
/// equally and the rest get 0.
pub fn shepard_weights<T: Real>(centers: &[Point3<T>], p: &Point3<T>, covering: &[usize]) -> Result<Vec<T>> {
    if covering.is_empty() {
        return Err(Error::Uncovered {
            point: p.to_f64_array(),
        });
    }
    let dists: Vec<T> = covering.iter().map(|&j| distance(p, &centers[j])).collect();
    let tol = T::lit(COINCIDENCE_TOLERANCE);
    let coincident = dists.iter().filter(|&&r| r < tol).count();
    if coincident > 0 {
        let share = T::one() / T::from_usize_lossy(coincident);
        return Ok(dists.iter().map(|&r| if r < tol { share } else { T::zero() }).collect());
    }
    let inv: Vec<T> = dists.iter().map(|&r| T::one() / r).collect();
    let total: T = inv.iter().copied().sum();
    Ok(inv.into_iter().map(|w| w / total).collect())
}

/// Outcome of evaluating the model at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEvaluation<T> {
    pub value: T,
    /// Number of subdomains containing the point.
    pub covering: usize,
    /// Sum of the weights actually applied.
    pub weight_sum: T,
    /// True when the nearest-subdomain fallback was used.
    pub fallback: bool,
}

/// Aggregate diagnostics of a batch evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvaluationReport {
    pub uncovered: usize,
}

/// A fitted partition-of-unity interpolant.
#[derive(Debug, Clone)]
pub struct PuModel<T> {
    config: PuConfig<T>,
    geometry: Arc<PuGeometry<T>>,
    fits: Vec<Option<LocalCoefficients<T>>>,
}

impl<T: Real> PuModel<T> {
    /// Builds the geometry and fits every local interpolant.
    pub fn fit(nodes: Vec<DataSite<T>>, config: PuConfig<T>) -> Result<Self> {
        let geometry = Arc::new(PuGeometry::build(nodes, &config)?);
        Self::from_geometry(geometry, config)
    }

    /// Fits `config.kernel` on an existing geometry.
    pub fn from_geometry(geometry: Arc<PuGeometry<T>>, config: PuConfig<T>) -> Result<Self> {
        let fits = geometry.solve(config.kernel, config.parallel)?;
        Ok(Self {
            config,
            geometry,
            fits,
        })
    }

    pub fn config(&self) -> &PuConfig<T> {
        &self.config
    }

    pub fn geometry(&self) -> &Arc<PuGeometry<T>> {
        &self.geometry
    }

    pub fn subdomains(&self) -> &[Subdomain<T>] {
        self.geometry.subdomains()
    }

    pub fn nodes(&self) -> &[DataSite<T>] {
        self.geometry.nodes()
    }

    pub fn radius(&self) -> T {
        self.geometry.radius()
    }

    /// Local coefficients of subdomain `j`; `None` for a skipped empty patch.
    pub fn coefficients(&self, j: usize) -> Option<&LocalCoefficients<T>> {
        self.fits[j].as_ref()
    }

    /// Number of local solves flagged as ill-conditioned.
    pub fn ill_conditioned_count(&self) -> usize {
        self.fits
            .iter()
            .flatten()
            .filter(|c| !c.is_well_conditioned())
            .count()
    }

    /// Active subdomains whose ball contains `p`, ascending.
    pub fn covering(&self, p: &Point3<T>) -> Result<Vec<usize>> {
        let mut ids = Vec::new();
        self.covering_into(p, &mut ids)?;
        Ok(ids)
    }

    fn covering_into(&self, p: &Point3<T>, out: &mut Vec<usize>) -> Result<()> {
        self.geometry
            .center_search
            .radius_query_into(p, self.geometry.radius, out)?;
        out.retain(|&j| self.fits[j].is_some());
        Ok(())
    }

    /// Shepard weights of `covering` at `p`.
    pub fn shepard_weights(&self, p: &Point3<T>, covering: &[usize]) -> Result<Vec<T>> {
        shepard_weights(self.geometry.center_search.points(), p, covering)
    }

    /// Local interpolant `R_j(p)`; zero for an inactive subdomain.
    pub fn local_value(&self, j: usize, p: &Point3<T>) -> T {
        let Some(fit) = &self.fits[j] else {
            return T::zero();
        };
        let nodes = &self.geometry.nodes;
        let kernel = &self.config.kernel;
        self.geometry.subdomains[j]
            .node_ids
            .iter()
            .zip(&fit.coeffs)
            .fold(T::zero(), |acc, (&i, &c)| {
                acc + c * kernel_value(kernel, distance(p, &nodes[i].position))
            })
    }

    pub fn evaluate_detailed(&self, p: &Point3<T>) -> Result<PointEvaluation<T>> {
        let mut covering = Vec::new();
        self.evaluate_with(p, &mut covering)
    }

    fn evaluate_with(&self, p: &Point3<T>, covering: &mut Vec<usize>) -> Result<PointEvaluation<T>> {
        self.covering_into(p, covering)?;
        if covering.is_empty() {
            if self.config.uncovered == UncoveredPolicy::Error {
                return Err(Error::Uncovered {
                    point: p.to_f64_array(),
                });
            }
            let j = self.nearest_active(p).ok_or(Error::Uncovered {
                point: p.to_f64_array(),
            })?;
            return Ok(PointEvaluation {
                value: self.local_value(j, p),
                covering: 0,
                weight_sum: T::one(),
                fallback: true,
            });
        }
        let weights = self.shepard_weights(p, covering)?;
        let mut value = T::zero();
        let mut weight_sum = T::zero();
        for (&j, &w) in covering.iter().zip(&weights) {
            weight_sum += w;
            if w != T::zero() {
                value += w * self.local_value(j, p);
            }
        }
        Ok(PointEvaluation {
            value,
            covering: covering.len(),
            weight_sum,
            fallback: false,
        })
    }

    fn nearest_active(&self, p: &Point3<T>) -> Option<usize> {
        self.geometry
            .center_search
            .points()
            .iter()
            .enumerate()
            .filter(|(j, _)| self.fits[*j].is_some())
            .map(|(j, c)| (squared_distance(p, c), j))
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)))
            .map(|(_, j)| j)
    }

    /// Global interpolant `Σ_j W_j(p) R_j(p)`.
    pub fn evaluate(&self, p: &Point3<T>) -> Result<T> {
        self.evaluate_detailed(p).map(|e| e.value)
    }

    pub fn evaluate_batch(&self, points: &[Point3<T>]) -> Result<Vec<T>> {
        self.evaluate_batch_report(points).map(|(v, _)| v)
    }

    /// Evaluates every point, counting fallbacks for uncovered points.
    pub fn evaluate_batch_report(&self, points: &[Point3<T>]) -> Result<(Vec<T>, EvaluationReport)> {
        let evals: Vec<PointEvaluation<T>> = if self.config.parallel {
            points
                .par_iter()
                .map_init(Vec::new, |buf, p| self.evaluate_with(p, buf))
                .collect::<Result<_>>()?
        } else {
            let mut buf = Vec::new();
            points
                .iter()
                .map(|p| self.evaluate_with(p, &mut buf))
                .collect::<Result<_>>()?
        };
        let report = EvaluationReport {
            uncovered: evals.iter().filter(|e| e.fallback).count(),
        };
        Ok((evals.into_iter().map(|e| e.value).collect(), report))
    }
}
