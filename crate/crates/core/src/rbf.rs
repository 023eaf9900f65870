//! Radial kernels and local RBF interpolation problems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, DataSite, Point3};
use crate::linalg::{solve_system, DenseMatrix, Factorization};
use crate::scalar::Real;

/// Kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    /// Gaussian `exp(-α² r²)`.
    Gaussian,
    /// Matérn C4 `exp(-ε r) (ε² r² + 3 ε r + 3)`, unnormalized (`φ(0) = 3`).
    Matern4,
    /// Wendland C4 `(1 - δ r)₊⁶ (35 δ² r² + 18 δ r + 3)`, support radius `1/δ`.
    Wendland4,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [Self::Gaussian, Self::Matern4, Self::Wendland4];

    /// Short tag: `G`, `M4` or `W4`.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Gaussian => "G",
            Self::Matern4 => "M4",
            Self::Wendland4 => "W4",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g" | "gaussian" => Ok(Self::Gaussian),
            "m4" | "matern" | "matern4" => Ok(Self::Matern4),
            "w4" | "wendland" | "wendland4" => Ok(Self::Wendland4),
            other => Err(Error::InvalidConfig(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Kernel family plus its shape parameter (α, ε or δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    pub shape: T,
}

impl<T: Real> KernelSpec<T> {
    pub fn new(family: KernelFamily, shape: T) -> Result<Self> {
        if !(shape.is_finite() && shape > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "shape parameter must be positive, got {shape}"
            )));
        }
        Ok(Self { family, shape })
    }

    pub fn gaussian(alpha: T) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, alpha)
    }

    pub fn matern4(epsilon: T) -> Result<Self> {
        Self::new(KernelFamily::Matern4, epsilon)
    }

    pub fn wendland4(delta: T) -> Result<Self> {
        Self::new(KernelFamily::Wendland4, delta)
    }

    #[inline]
    pub fn eval(&self, r: T) -> T {
        kernel_value(self, r)
    }
}

/// `φ(r)` for the given kernel.
#[inline]
pub fn kernel_value<T: Real>(spec: &KernelSpec<T>, r: T) -> T {
    let s = spec.shape;
    match spec.family {
        KernelFamily::Gaussian => (-(s * s * r * r)).exp(),
        KernelFamily::Matern4 => {
            let t = s * r;
            (-t).exp() * (t * t + T::lit(3.0) * t + T::lit(3.0))
        }
        KernelFamily::Wendland4 => {
            let t = s * r;
            let base = T::one() - t;
            if base <= T::zero() || r >= T::one() / s {
                return T::zero();
            }
            let b2 = base * base;
            let b6 = b2 * b2 * b2;
            b6 * (T::lit(35.0) * t * t + T::lit(18.0) * t + T::lit(3.0))
        }
    }
}

/// The interpolation problem on one subdomain.
#[derive(Debug, Clone)]
pub struct LocalSystem<T> {
    sites: Vec<DataSite<T>>,
    kernel: KernelSpec<T>,
}

impl<T: Real> LocalSystem<T> {
    /// Fails on an empty or non-finite site list or repeated positions.
    pub fn new(sites: Vec<DataSite<T>>, kernel: KernelSpec<T>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidConfig("local system needs at least one site".into()));
        }
        for s in &sites {
            s.validate()?;
        }
        let mut keys: Vec<[u64; 3]> = sites
            .iter()
            .map(|s| s.position.to_f64_array().map(|c| (c + 0.0).to_bits()))
            .collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!(
                "duplicate site at ({}, {}, {})",
                f64::from_bits(w[0][0]),
                f64::from_bits(w[0][1]),
                f64::from_bits(w[0][2])
            )));
        }
        Ok(Self { sites, kernel })
    }

    pub fn sites(&self) -> &[DataSite<T>] {
        &self.sites
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Solved expansion coefficients of one local interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoefficients<T> {
    pub coeffs: Vec<T>,
    /// Estimated 1-norm condition number of the interpolation matrix.
    pub condition_estimate: T,
    /// `‖Φc − f‖∞` evaluated in compensated arithmetic.
    pub residual: T,
    pub method: Factorization,
}

/// Solves above this estimate are reported as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e12;

impl<T: Real> LocalCoefficients<T> {
    pub fn is_well_conditioned(&self) -> bool {
        self.condition_estimate < T::lit(ILL_CONDITIONED)
    }
}

/// Interpolation matrix `Φ_ik = φ(‖x_i − x_k‖)`; exactly symmetric.
pub fn assemble<T: Real>(system: &LocalSystem<T>) -> DenseMatrix<T> {
    let positions: Vec<Point3<T>> = system.sites.iter().map(|s| s.position).collect();
    assemble_positions(&positions, &system.kernel)
}

pub(crate) fn assemble_positions<T: Real>(
    positions: &[Point3<T>],
    kernel: &KernelSpec<T>,
) -> DenseMatrix<T> {
    let n = positions.len();
    let mut m = DenseMatrix::zeros(n);
    let diag = kernel_value(kernel, T::zero());
    for i in 0..n {
        m.set(i, i, diag);
        for k in 0..i {
            let v = kernel_value(kernel, distance(&positions[i], &positions[k]));
            m.set(i, k, v);
            m.set(k, i, v);
        }
    }
    m
}

/// Solves `Φ c = f` for the local system.
///
/// A singular system is reported with `subdomain = 0`; callers that know the
/// patch id substitute it.
pub fn solve_local<T: Real>(system: &LocalSystem<T>) -> Result<LocalCoefficients<T>> {
    let positions: Vec<Point3<T>> = system.sites.iter().map(|s| s.position).collect();
    let values: Vec<T> = system.sites.iter().map(|s| s.value).collect();
    solve_positions(&positions, &values, &system.kernel).ok_or(Error::SingularSystem {
        subdomain: 0,
        size: system.len(),
    })
}

pub(crate) fn solve_positions<T: Real>(
    positions: &[Point3<T>],
    values: &[T],
    kernel: &KernelSpec<T>,
) -> Option<LocalCoefficients<T>> {
    let matrix = assemble_positions(positions, kernel);
    let solution = solve_system(&matrix, values)?;
    Some(LocalCoefficients {
        coeffs: solution.x,
        condition_estimate: solution.condition_estimate,
        residual: solution.residual,
        method: solution.method,
    })
}

/// `R(p) = Σ c_k φ(‖p − x_k‖)`.
pub fn evaluate_local<T: Real>(
    system: &LocalSystem<T>,
    coeffs: &LocalCoefficients<T>,
    p: &Point3<T>,
) -> T {
    debug_assert_eq!(system.len(), coeffs.coeffs.len());
    system
        .sites
        .iter()
        .zip(&coeffs.coeffs)
        .fold(T::zero(), |acc, (s, &c)| acc + c * kernel_value(&system.kernel, distance(p, &s.position)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halton::{generate, HaltonConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn site(x: f64, y: f64, z: f64, v: f64) -> DataSite<f64> {
        DataSite::new(Point3::new(x, y, z), v)
    }

    #[test]
    fn kernel_values() {
        for a in [0.5, 2.0, 7.3] {
            assert_eq!(kernel_value(&KernelSpec::gaussian(a).unwrap(), 0.0), 1.0);
            assert_eq!(kernel_value(&KernelSpec::matern4(a).unwrap(), 0.0), 3.0);
            assert_eq!(kernel_value(&KernelSpec::wendland4(a).unwrap(), 0.0), 3.0);
            assert_eq!(kernel_value(&KernelSpec::wendland4(a).unwrap(), 1.0 / a), 0.0);
        }
        assert_eq!(kernel_value(&KernelSpec::wendland4(2.0).unwrap(), 1.0), 0.0);
        assert_relative_eq!(
            kernel_value(&KernelSpec::gaussian(2.0).unwrap(), 0.5),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        // ε r = 1: e⁻¹ (1 + 3 + 3).
        assert_relative_eq!(
            kernel_value(&KernelSpec::matern4(2.0).unwrap(), 0.5),
            7.0 * (-1.0f64).exp(),
            max_relative = 1e-15
        );
        // δ r = 1/2: (1/2)⁶ (35/4 + 9 + 3).
        assert_relative_eq!(
            kernel_value(&KernelSpec::wendland4(1.0).unwrap(), 0.5),
            (35.0 / 4.0 + 12.0) / 64.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn invalid_shape_rejected() {
        assert!(KernelSpec::gaussian(0.0f64).is_err());
        assert!(KernelSpec::matern4(-1.0f64).is_err());
        assert!(KernelSpec::wendland4(f64::NAN).is_err());
        assert_eq!("w4".parse::<KernelFamily>().unwrap(), KernelFamily::Wendland4);
        assert!("x".parse::<KernelFamily>().is_err());
    }

    #[test]
    fn assemble_small_cases() {
        let k = KernelSpec::matern4(3.0).unwrap();
        let one = LocalSystem::new(vec![site(0.1, 0.2, 0.3, 1.0)], k).unwrap();
        assert_eq!(assemble(&one).row(0), &[3.0]);

        let two = LocalSystem::new(vec![site(0.0, 0.0, 0.0, 1.0), site(0.3, 0.4, 0.0, 2.0)], k).unwrap();
        let m = assemble(&two);
        let phi = kernel_value(&k, 0.5);
        assert_eq!(m.row(0), &[3.0, phi]);
        assert_eq!(m.row(1), &[phi, 3.0]);

        let w = KernelSpec::wendland4(5.0).unwrap();
        let far = LocalSystem::new(
            vec![site(0.0, 0.0, 0.0, 1.0), site(0.5, 0.0, 0.0, 1.0), site(0.0, 0.5, 0.5, 1.0)],
            w,
        )
        .unwrap();
        let m = assemble(&far);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), if i == j { 3.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        assert!(LocalSystem::<f64>::new(vec![], k).is_err());
        assert!(LocalSystem::new(vec![site(0.1, 0.1, 0.1, 1.0), site(0.1, 0.1, 0.1, 2.0)], k).is_err());
    }

    #[test]
    fn single_site_solve_and_evaluate() {
        let k = KernelSpec::matern4(2.0).unwrap();
        let sys = LocalSystem::new(vec![site(0.5, 0.5, 0.5, 1.2)], k).unwrap();
        let c = solve_local(&sys).unwrap();
        assert_relative_eq!(c.coeffs[0], 0.4, max_relative = 1e-15);
        let p = Point3::new(0.5, 0.5, 0.75);
        let expected = 1.2 * kernel_value(&k, 0.25) / 3.0;
        assert_relative_eq!(evaluate_local(&sys, &c, &p), expected, max_relative = 1e-14);
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let pts = generate::<f64>(&HaltonConfig::new(40)).unwrap();
        let sites = pts.iter().map(|&p| DataSite::new(p, 0.0)).collect();
        let sys = LocalSystem::new(sites, KernelSpec::wendland4(1.0).unwrap()).unwrap();
        let c = solve_local(&sys).unwrap();
        assert!(c.coeffs.iter().all(|&v| v == 0.0));
        let zero = LocalCoefficients { coeffs: vec![0.0; 40], ..c };
        assert_eq!(evaluate_local(&sys, &zero, &Point3::splat(0.3)), 0.0);
    }

    fn local_sites(n: usize, start: u64, scale: f64) -> Vec<DataSite<f64>> {
        generate::<f64>(&HaltonConfig::new(n).with_start_index(start))
            .unwrap()
            .into_iter()
            .map(|p| {
                let q = Point3::new(0.4 + scale * p.x, 0.3 + scale * p.y, 0.5 + scale * p.z);
                DataSite::new(q, (3.0 * q.x).sin() + q.y * q.z)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residual_and_interpolation(
            n in 1usize..80,
            start in 1u64..500,
            family in prop::sample::select(KernelFamily::ALL.to_vec()),
            shape in 0.5..6.0f64,
        ) {
            let sites = local_sites(n, start, 0.2);
            let sys = LocalSystem::new(sites.clone(), KernelSpec::new(family, shape).unwrap()).unwrap();
            let c = solve_local(&sys).unwrap();
            prop_assert_eq!(c.coeffs.len(), n);
            let fmax = sites.iter().fold(0.0f64, |m, s| m.max(s.value.abs()));
            let m = assemble(&sys);
            prop_assert!(m.is_symmetric());
            if c.is_well_conditioned() {
                let r = m.mul_vec(&c.coeffs);
                for (ri, s) in r.iter().zip(&sites) {
                    prop_assert!((ri - s.value).abs() <= 1e-8 * (1.0 + fmax));
                }
                for s in &sites {
                    let v = evaluate_local(&sys, &c, &s.position);
                    prop_assert!((v - s.value).abs() <= 1e-6 * (1.0 + fmax));
                }
            }
        }

        #[test]
        fn solve_is_linear_in_data(n in 2usize..50, scale in -100.0..100.0f64, shape in 0.5..3.0f64) {
            let sites = local_sites(n, 7, 0.25);
            let k = KernelSpec::wendland4(shape).unwrap();
            let base = solve_local(&LocalSystem::new(sites.clone(), k).unwrap()).unwrap();
            let scaled_sites: Vec<_> = sites.iter().map(|s| DataSite::new(s.position, s.value * scale)).collect();
            let scaled_sys = LocalSystem::new(scaled_sites, k).unwrap();
            let scaled = solve_local(&scaled_sys).unwrap();
            let cmax = base.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in base.coeffs.iter().zip(&scaled.coeffs) {
                prop_assert!((a * scale - b).abs() <= 1e-9 * cmax * scale.abs().max(1.0));
            }
        }

        #[test]
        fn wendland_entries_vanish_beyond_support(n in 2usize..40, shape in 2.0..20.0f64) {
            let sites = local_sites(n, 3, 1.0 / 3.0);
            let k = KernelSpec::wendland4(shape).unwrap();
            let sys = LocalSystem::new(sites.clone(), k).unwrap();
            let m = assemble(&sys);
            for i in 0..n {
                for j in 0..n {
                    if distance(&sites[i].position, &sites[j].position) > 1.0 / shape {
                        prop_assert_eq!(m.get(i, j), 0.0);
                    }
                }
            }
        }
    }
}
