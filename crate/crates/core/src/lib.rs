//! Trivariate scattered-data interpolation on the unit cube.
//!
//! A partition-of-unity interpolant blends local radial-basis-function fits on
//! overlapping spherical subdomains. Nodes belonging to each subdomain, and
//! subdomains containing each evaluation point, are located with a
//! cube-partition index whose cube side matches the subdomain radius, so each
//! search visits at most 27 cubes.
//!
//! ```
//! use cubepu::{DataSite, KernelSpec, Point3, PuConfig, PuModel};
//! use cubepu::halton::{generate, HaltonConfig};
//!
//! let nodes: Vec<DataSite> = generate(&HaltonConfig::new(1000))
//!     .unwrap()
//!     .into_iter()
//!     .map(|p: Point3| DataSite::new(p, p.x * p.y + p.z))
//!     .collect();
//! let config = PuConfig::new(KernelSpec::wendland4(0.6).unwrap(), 125);
//! let model = PuModel::fit(nodes, config).unwrap();
//! let v = model.evaluate(&Point3::new(0.5, 0.5, 0.5)).unwrap();
//! assert!((v - 0.75).abs() < 1e-3);
//! ```
//!
//! Every numeric type is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod bench;
pub mod cube_index;
pub mod error;
pub mod geometry;
pub mod halton;
pub mod linalg;
pub mod pu;
pub mod rbf;
pub mod scalar;

pub use cube_index::{CellId, SearchMode};
pub use error::{Error, Result};
pub use rbf::KernelFamily;
pub use scalar::Real;

pub type Point3 = geometry::Point3<f64>;
pub type DataSite = geometry::DataSite<f64>;
pub type UnitCube = geometry::UnitCube<f64>;
pub type GridParams = cube_index::GridParams<f64>;
pub type CubeIndex = cube_index::CubeIndex<f64>;
pub type ExhaustiveScan = cube_index::ExhaustiveScan<f64>;
pub type KernelSpec = rbf::KernelSpec<f64>;
pub type LocalSystem = rbf::LocalSystem<f64>;
pub type LocalCoefficients = rbf::LocalCoefficients<f64>;
pub type CenterSource = pu::CenterSource<f64>;
pub type PuConfig = pu::PuConfig<f64>;
pub type PuGeometry = pu::PuGeometry<f64>;
pub type PuModel = pu::PuModel<f64>;
pub type Subdomain = pu::Subdomain<f64>;
