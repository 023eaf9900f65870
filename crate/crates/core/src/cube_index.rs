//! Cube-partition spatial index over the unit cube.
//!
//! The domain `[0,1]³` is split into `q³` equal cubes. Points are bucketed by
//! cube in `(w, v, u)` lexicographic order, so that every cube owns one
//! contiguous run of a permutation array delimited by begin/end offsets. A
//! fixed-radius query only visits the cubes within `i_star` cells of the cube
//! holding the query centre (at most `(2 i_star + 1)³` of them, fewer near the
//! boundary) and filters their points by exact distance.
//!
//! [`ExhaustiveScan`] answers the same queries by checking every point. Both
//! compare the same floating-point squared distance, so their answers agree
//! exactly.

use crate::error::{Error, Result};
use crate::geometry::{squared_distance, Point3, UnitCube};
use crate::scalar::Real;

/// Grid resolution and search halo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams<T> {
    cube_side: T,
    q: usize,
    i_star: usize,
}

impl<T: Real> GridParams<T> {
    /// Grid for fixed-radius queries of the given radius.
    ///
    /// Uses `q = max(1, ⌊1/radius⌋)` cubes of side `1/q`, so every cube is at
    /// least as wide as the radius and a one-cube halo suffices. A radius
    /// above 1 yields the degenerate single-cube grid whose halo spans the
    /// whole domain (see [`is_degenerate`](Self::is_degenerate)).
    pub fn from_radius(radius: T) -> Result<Self> {
        if !(radius.is_finite() && radius > T::zero()) {
            return Err(Error::InvalidRadius {
                radius: radius.as_f64(),
            });
        }
        let mut q = (T::one() / radius).floor().to_usize().unwrap_or(1).max(1);
        while q > 1 && T::one() / T::from_usize_lossy(q) < radius {
            q -= 1;
        }
        let side = T::one() / T::from_usize_lossy(q);
        let mut i_star = (radius / side).ceil().to_usize().unwrap_or(1).max(1);
        while T::from_usize_lossy(i_star) * side < radius {
            i_star += 1;
        }
        Ok(Self {
            cube_side: side,
            q,
            i_star,
        })
    }

    /// Grid with an explicit number of cubes per axis and halo width.
    pub fn new(q: usize, i_star: usize) -> Result<Self> {
        if q == 0 || i_star == 0 {
            return Err(Error::InvalidConfig(format!(
                "grid needs q >= 1 and i_star >= 1 (got q = {q}, i_star = {i_star})"
            )));
        }
        Ok(Self {
            cube_side: T::one() / T::from_usize_lossy(q),
            q,
            i_star,
        })
    }

    pub fn cube_side(&self) -> T {
        self.cube_side
    }

    /// Cubes per axis.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn i_star(&self) -> usize {
        self.i_star
    }

    pub fn cell_count(&self) -> usize {
        self.q * self.q * self.q
    }

    /// Upper bound on cubes visited per query, `(2 i_star + 1)³`.
    pub fn scan_budget(&self) -> usize {
        let w = 2 * self.i_star + 1;
        w * w * w
    }

    /// Largest radius a query may use without missing neighbours.
    ///
    /// Infinite when the halo already reaches every cube from every cube.
    pub fn max_query_radius(&self) -> T {
        if self.i_star + 1 >= self.q {
            T::infinity()
        } else {
            T::from_usize_lossy(self.i_star) * self.cube_side
        }
    }

    /// True for the single-cube grid, where every query scans all points.
    pub fn is_degenerate(&self) -> bool {
        self.q == 1
    }

    #[inline]
    fn axis_cell(&self, c: T) -> usize {
        // Faces belong to the higher cube; coordinate 1.0 clamps into cube q.
        let k = (c * T::from_usize_lossy(self.q)).floor().to_usize().unwrap_or(0);
        k.min(self.q - 1)
    }

    #[inline]
    fn linear(&self, c: CellId) -> usize {
        ((c.w - 1) * self.q + (c.v - 1)) * self.q + (c.u - 1)
    }
}

/// Cubes per axis under the ceiling convention `q = ⌈1/radius⌉`.
///
/// This is the value tabulated for the reference experiments; the index
/// itself uses the floor convention of [`GridParams::from_radius`].
pub fn ceiling_cells_per_axis<T: Real>(radius: T) -> usize {
    (T::one() / radius).ceil().to_usize().unwrap_or(1).max(1)
}

/// One-based cube coordinates `[u, v, w]` along x, y, z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub u: usize,
    pub v: usize,
    pub w: usize,
}

impl CellId {
    pub const fn new(u: usize, v: usize, w: usize) -> Self {
        Self { u, v, w }
    }
}

/// Cube containing `p`.
pub fn cell_of<T: Real>(params: &GridParams<T>, p: &Point3<T>) -> Result<CellId> {
    UnitCube::unit().check(p)?;
    Ok(CellId::new(
        params.axis_cell(p.x) + 1,
        params.axis_cell(p.y) + 1,
        params.axis_cell(p.z) + 1,
    ))
}

/// First and last cube of the search block around `c`, clamped to `[1, q]`.
pub fn neighbor_cell_range<T: Real>(params: &GridParams<T>, c: CellId) -> (CellId, CellId) {
    let lo = |k: usize| k.saturating_sub(params.i_star).max(1);
    let hi = |k: usize| (k + params.i_star).min(params.q);
    (
        CellId::new(lo(c.u), lo(c.v), lo(c.w)),
        CellId::new(hi(c.u), hi(c.v), hi(c.w)),
    )
}

/// Number of cubes in the block spanned by `first..=last`.
pub fn range_cell_count(first: CellId, last: CellId) -> usize {
    (last.u + 1 - first.u) * (last.v + 1 - first.v) * (last.w + 1 - first.w)
}

/// Fixed-radius neighbour search over a static point set.
pub trait RadiusSearch<T: Real> {
    fn points(&self) -> &[Point3<T>];

    /// Appends to `out` the ids of all points within `radius` of `center`
    /// (closed ball), in ascending id order. `out` is cleared first.
    fn radius_query_into(&self, center: &Point3<T>, radius: T, out: &mut Vec<usize>)
        -> Result<()>;

    fn radius_query(&self, center: &Point3<T>, radius: T) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.radius_query_into(center, radius, &mut out)?;
        Ok(out)
    }
}

fn check_query<T: Real>(center: &Point3<T>, radius: T) -> Result<()> {
    UnitCube::unit().check(center)?;
    if radius.is_nan() || radius < T::zero() {
        return Err(Error::InvalidRadius {
            radius: radius.as_f64(),
        });
    }
    Ok(())
}

/// Sorted, cube-bucketed index over a point set.
#[derive(Debug, Clone)]
pub struct CubeIndex<T> {
    params: GridParams<T>,
    points: Vec<Point3<T>>,
    /// Sorted rank to original point id.
    permutation: Vec<usize>,
    /// Points in permutation order, for contiguous scans.
    sorted: Vec<Point3<T>>,
    /// `cell_offsets[k]..cell_offsets[k + 1]` is cube `k`'s run in `permutation`.
    cell_offsets: Vec<usize>,
}

impl<T: Real> CubeIndex<T> {
    /// Buckets `points` by cube. Ties keep input order, so the build is
    /// deterministic and each cube lists its ids in ascending order.
    pub fn build(points: Vec<Point3<T>>, params: GridParams<T>) -> Result<Self> {
        let cells = points
            .iter()
            .map(|p| cell_of(&params, p).map(|c| params.linear(c)))
            .collect::<Result<Vec<_>>>()?;

        let mut cell_offsets = vec![0usize; params.cell_count() + 1];
        for &k in &cells {
            cell_offsets[k + 1] += 1;
        }
        for k in 0..params.cell_count() {
            cell_offsets[k + 1] += cell_offsets[k];
        }

        let mut cursor = cell_offsets.clone();
        let mut permutation = vec![0usize; points.len()];
        for (id, &k) in cells.iter().enumerate() {
            permutation[cursor[k]] = id;
            cursor[k] += 1;
        }
        let sorted = permutation.iter().map(|&id| points[id]).collect();

        Ok(Self {
            params,
            points,
            permutation,
            sorted,
            cell_offsets,
        })
    }

    pub fn params(&self) -> &GridParams<T> {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn cell_offsets(&self) -> &[usize] {
        &self.cell_offsets
    }

    /// Original ids of the points in cube `c`.
    pub fn cell_members(&self, c: CellId) -> &[usize] {
        let k = self.params.linear(c);
        &self.permutation[self.cell_offsets[k]..self.cell_offsets[k + 1]]
    }

    /// Point count per cube, in `(w, v, u)` lexicographic order.
    pub fn cell_counts(&self) -> Vec<usize> {
        self.cell_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn count_nonempty_cells(&self) -> usize {
        self.cell_offsets.windows(2).filter(|w| w[1] > w[0]).count()
    }

    /// Like [`RadiusSearch::radius_query_into`], returning the number of
    /// cubes visited.
    pub fn radius_query_counted(
        &self,
        center: &Point3<T>,
        radius: T,
        out: &mut Vec<usize>,
    ) -> Result<usize> {
        out.clear();
        check_query(center, radius)?;
        let limit = self.params.max_query_radius();
        if radius > limit {
            return Err(Error::RadiusTooLarge {
                radius: radius.as_f64(),
                limit: limit.as_f64(),
            });
        }

        let home = cell_of(&self.params, center)?;
        let (first, last) = neighbor_cell_range(&self.params, home);
        let r2 = radius * radius;
        let q = self.params.q;
        for w in first.w..=last.w {
            for v in first.v..=last.v {
                // Cubes u = first.u..=last.u are adjacent in the permutation.
                let row = ((w - 1) * q + (v - 1)) * q;
                let begin = self.cell_offsets[row + first.u - 1];
                let end = self.cell_offsets[row + last.u];
                for (rank, p) in self.sorted[begin..end].iter().enumerate() {
                    if squared_distance(p, center) <= r2 {
                        out.push(self.permutation[begin + rank]);
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(range_cell_count(first, last))
    }
}

impl<T: Real> RadiusSearch<T> for CubeIndex<T> {
    fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    fn radius_query_into(
        &self,
        center: &Point3<T>,
        radius: T,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        self.radius_query_counted(center, radius, out).map(|_| ())
    }
}

/// Brute-force scanner used as the no-cube baseline and as a test oracle.
#[derive(Debug, Clone)]
pub struct ExhaustiveScan<T> {
    points: Vec<Point3<T>>,
}

impl<T: Real> ExhaustiveScan<T> {
    pub fn build(points: Vec<Point3<T>>) -> Result<Self> {
        let cube = UnitCube::unit();
        for p in &points {
            cube.check(p)?;
        }
        Ok(Self { points })
    }
}

impl<T: Real> RadiusSearch<T> for ExhaustiveScan<T> {
    fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    fn radius_query_into(
        &self,
        center: &Point3<T>,
        radius: T,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        out.clear();
        check_query(center, radius)?;
        let r2 = radius * radius;
        out.extend(
            self.points
                .iter()
                .enumerate()
                .filter(|(_, p)| squared_distance(*p, center) <= r2)
                .map(|(id, _)| id),
        );
        Ok(())
    }
}

/// Which neighbour search backs a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    #[default]
    Cube,
    NoCube,
}

impl SearchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SearchMode::Cube => "cube",
            SearchMode::NoCube => "no_cube",
        }
    }
}

/// A [`RadiusSearch`] implementation chosen at run time.
#[derive(Debug, Clone)]
pub enum Searcher<T> {
    Cube(CubeIndex<T>),
    Exhaustive(ExhaustiveScan<T>),
}

impl<T: Real> Searcher<T> {
    /// Builds the searcher for `mode`, sizing a cube grid for `radius`.
    pub fn build(points: Vec<Point3<T>>, radius: T, mode: SearchMode) -> Result<Self> {
        Ok(match mode {
            SearchMode::Cube => {
                Searcher::Cube(CubeIndex::build(points, GridParams::from_radius(radius)?)?)
            }
            SearchMode::NoCube => Searcher::Exhaustive(ExhaustiveScan::build(points)?),
        })
    }

    pub fn mode(&self) -> SearchMode {
        match self {
            Searcher::Cube(_) => SearchMode::Cube,
            Searcher::Exhaustive(_) => SearchMode::NoCube,
        }
    }

    pub fn cube_index(&self) -> Option<&CubeIndex<T>> {
        match self {
            Searcher::Cube(index) => Some(index),
            Searcher::Exhaustive(_) => None,
        }
    }
}

impl<T: Real> RadiusSearch<T> for Searcher<T> {
    fn points(&self) -> &[Point3<T>] {
        match self {
            Searcher::Cube(s) => s.points(),
            Searcher::Exhaustive(s) => s.points(),
        }
    }

    fn radius_query_into(
        &self,
        center: &Point3<T>,
        radius: T,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        match self {
            Searcher::Cube(s) => s.radius_query_into(center, radius, out),
            Searcher::Exhaustive(s) => s.radius_query_into(center, radius, out),
        }
    }
}
