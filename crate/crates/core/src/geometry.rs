//! Points, labelled data sites and the unit-cube domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point in three-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_f64_array(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
    }

    /// Fails with [`Error::NonFinite`] unless every coordinate is finite.
    pub fn validate(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                point: self.to_f64_array(),
            })
        }
    }
}

impl<T: Real> From<[T; 3]> for Point3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self::new(x, y, z)
    }
}

/// Squared Euclidean distance.
///
/// The summation order is fixed so that every search path in the crate
/// compares exactly the same floating-point value against `radius²`.
#[inline]
pub fn squared_distance<T: Real>(a: &Point3<T>, b: &Point3<T>) -> T {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn distance<T: Real>(a: &Point3<T>, b: &Point3<T>) -> T {
    squared_distance(a, b).sqrt()
}

/// A node together with the sampled function value at it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DataSite<T> {
    pub position: Point3<T>,
    pub value: T,
}

impl<T: Real> DataSite<T> {
    pub fn new(position: Point3<T>, value: T) -> Self {
        Self { position, value }
    }

    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        if self.value.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                point: self.position.to_f64_array(),
            })
        }
    }
}

/// Closed axis-aligned box; [`UnitCube::unit`] is the interpolation domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCube<T> {
    pub lo: Point3<T>,
    pub hi: Point3<T>,
}

impl<T: Real> UnitCube<T> {
    pub fn unit() -> Self {
        Self {
            lo: Point3::splat(T::zero()),
            hi: Point3::splat(T::one()),
        }
    }

    /// True iff `lo <= p <= hi` componentwise; faces are included.
    pub fn contains(&self, p: &Point3<T>) -> bool {
        self.lo.x <= p.x
            && p.x <= self.hi.x
            && self.lo.y <= p.y
            && p.y <= self.hi.y
            && self.lo.z <= p.z
            && p.z <= self.hi.z
    }

    /// Like [`contains`](Self::contains) but returns a descriptive error.
    pub fn check(&self, p: &Point3<T>) -> Result<()> {
        p.validate()?;
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                point: p.to_f64_array(),
            })
        }
    }
}

impl<T: Real> Default for UnitCube<T> {
    fn default() -> Self {
        Self::unit()
    }
}

/// Vertex lattice `{i / (side - 1)}³` covering the closed unit cube, x fastest.
pub fn vertex_lattice<T: Real>(side: usize) -> Vec<Point3<T>> {
    assert!(side >= 2, "lattice side must be at least 2");
    let denom = T::from_usize_lossy(side - 1);
    let coord = |i: usize| T::from_usize_lossy(i) / denom;
    let mut out = Vec::with_capacity(side * side * side);
    for k in 0..side {
        for j in 0..side {
            for i in 0..side {
                out.push(Point3::new(coord(i), coord(j), coord(k)));
            }
        }
    }
    out
}
