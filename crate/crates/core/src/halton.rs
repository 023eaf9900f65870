//! Halton node sets built from per-axis radical inverses.

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::scalar::Real;

/// Bases used for interpolation nodes.
pub const NODE_BASES: [u64; 3] = [2, 3, 5];
/// Bases used for subdomain centres, disjoint from [`NODE_BASES`].
pub const CENTER_BASES: [u64; 3] = [7, 11, 13];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaltonConfig {
    pub count: usize,
    pub bases: [u64; 3],
    /// Index of the first emitted point; 1 skips the all-zero point.
    pub start_index: u64,
}

impl HaltonConfig {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            bases: NODE_BASES,
            start_index: 1,
        }
    }

    pub fn with_bases(mut self, bases: [u64; 3]) -> Self {
        self.bases = bases;
        self
    }

    pub fn with_start_index(mut self, start_index: u64) -> Self {
        self.start_index = start_index;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidConfig("Halton count must be positive".into()));
        }
        for (i, &a) in self.bases.iter().enumerate() {
            if a < 2 {
                return Err(Error::InvalidConfig(format!("Halton base {a} is below 2")));
            }
            for &b in &self.bases[i + 1..] {
                if gcd(a, b) != 1 {
                    return Err(Error::InvalidConfig(format!(
                        "Halton bases {a} and {b} are not coprime"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Default for HaltonConfig {
    fn default() -> Self {
        Self::new(1)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Digit-reversed base-`base` fraction of `index`, in `[0, 1)`.
///
/// # Panics
/// If `base < 2`.
pub fn radical_inverse<T: Real>(mut index: u64, base: u64) -> T {
    assert!(base >= 2, "radical inverse base must be at least 2");
    let inv_base = T::one() / T::lit(base as f64);
    let mut scale = inv_base;
    let mut acc = T::zero();
    while index > 0 {
        let digit = index % base;
        acc += T::lit(digit as f64) * scale;
        scale *= inv_base;
        index /= base;
    }
    acc
}

/// Generates `config.count` Halton points; point `i` uses index `start_index + i`.
pub fn generate<T: Real>(config: &HaltonConfig) -> Result<Vec<Point3<T>>> {
    config.validate()?;
    let [bx, by, bz] = config.bases;
    Ok((0..config.count as u64)
        .map(|i| {
            let k = config.start_index + i;
            Point3::new(
                radical_inverse(k, bx),
                radical_inverse(k, by),
                radical_inverse(k, bz),
            )
        })
        .collect())
}
