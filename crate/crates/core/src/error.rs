use thiserror::Error;

/// Errors raised by index construction, fitting and evaluation.
///
/// Coordinates are reported as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({}, {}, {}) lies outside the unit cube", .point[0], .point[1], .point[2])]
    OutOfDomain { point: [f64; 3] },

    #[error("point ({}, {}, {}) has a non-finite coordinate", .point[0], .point[1], .point[2])]
    NonFinite { point: [f64; 3] },

    #[error("search radius must be positive and finite, got {radius}")]
    InvalidRadius { radius: f64 },

    #[error("query radius {radius} exceeds the grid halo {limit}; neighbours would be missed")]
    RadiusTooLarge { radius: f64, limit: f64 },

    #[error("local system of subdomain {subdomain} ({size} nodes) is numerically singular")]
    SingularSystem { subdomain: usize, size: usize },

    #[error("subdomain {subdomain} centred at ({}, {}, {}) captured no nodes", .center[0], .center[1], .center[2])]
    EmptySubdomain { subdomain: usize, center: [f64; 3] },

    #[error("point ({}, {}, {}) is not covered by any subdomain", .point[0], .point[1], .point[2])]
    Uncovered { point: [f64; 3] },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
