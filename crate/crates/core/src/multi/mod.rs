//! Regularization with several singular directions.
//!
//! Two geometries share this module.  [`crossing`] handles measures that
//! factor over disjoint coordinate blocks: the continued integral becomes a
//! function of one complex variable per block, with at most simple poles on
//! the coordinate hyperplanes, and the regularized coefficients are indexed
//! by the subset of blocks whose variable is sent to its constant term.
//! [`boundary`] handles one degenerate direction: a scale function vanishing
//! to first order on a hyperplane, where the continued integral is again a
//! one-variable function but with integer-spaced poles instead of the
//! two-spaced progression of a quadratic singularity.
//!
//! Both engines reduce to the window transform of [`crate::quadrature`]: the
//! integrand is expanded monomial by monomial, each factor integral is a
//! shifted [`WindowMellin`](crate::quadrature::WindowMellin) times sphere
//! moments and base window integrals, and every analytic operation (residue,
//! constant term, evaluation) acts factor by factor on that table.

use thiserror::Error;

use crate::cutoff::CutoffError;
use crate::exterior::FormError;
use crate::quadrature::QuadratureError;
use crate::C;

pub mod boundary;
pub mod crossing;

pub use boundary::{
    boundary_cutoff_expansion, boundary_cutoff_integral, boundary_expansion, boundary_residue,
    boundary_zeta, BoundaryProblem, BoundaryZeta,
};
pub use crossing::{
    crossing_conformal_check, crossing_expansion, multi_zeta, subset_coefficient, CrossingCheck,
    CrossingCheckReport, CrossingEvaluator, CrossingOptions, CrossingProblem, MultiExpansion,
};

/// Errors raised by the crossing and boundary engines.
#[derive(Debug, Error)]
pub enum MultiError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Cutoff(#[from] CutoffError),
    #[error("a crossing problem needs at least one component")]
    NoComponents,
    #[error("component {component} has odd block size {size}")]
    OddBlock { component: usize, size: usize },
    #[error("component {component} has an empty block")]
    EmptyBlock { component: usize },
    #[error("coordinate x{} appears in more than one component", coord + 1)]
    OverlappingBlocks { coord: usize },
    #[error("coordinate x{} is out of range for {n} variables", coord + 1)]
    CoordOutOfRange { coord: usize, n: usize },
    #[error("component index {component} is out of range for {count} components")]
    ComponentOutOfRange { component: usize, count: usize },
    #[error("expected {expected} entries, one per component, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("integrand must be a top-degree form in {n} variables")]
    NotTopDegree { n: usize },
    #[error("a numerator term lacks its radial window on component {component}")]
    MissingRadialWindow { component: usize },
    #[error("a numerator term mixes radial window radii on component {component}")]
    MixedRadialWindows { component: usize },
    #[error("a numerator term mixes scale window radii on the boundary coordinate")]
    MixedScaleWindows,
    #[error("coordinate x{} carries no cutoff window in some term", coord + 1)]
    MissingBaseWindow { coord: usize },
    #[error("coordinate x{} lies in a singular block but carries a one-dimensional window", coord + 1)]
    WindowOnBlockCoordinate { coord: usize },
    #[error("conformal factor on {got} variables, the problem has {expected}")]
    PhiVarMismatch { expected: usize, got: usize },
    #[error("conformal factors must have real coefficients")]
    ComplexConformal,
    #[error("subset mask {subset:#b} addresses more than {components} components")]
    SubsetOutOfRange { subset: u32, components: usize },
    #[error("zeta has a pole on the hyperplane s_{} = {location}", component + 1)]
    PoleHyperplane { component: usize, location: f64 },
    #[error("s = {s} is within the guard of the pole at {location}")]
    NearPole { s: C, location: f64 },
    #[error("the numerator does not split as (scale form) ^ (smooth) + (vanishing remainder)")]
    NotLogarithmic,
    #[error("boundary numerators window the scale coordinate directly; radial windows are for quadratic measures")]
    RadialWindowOnBoundary,
}

type Result<T> = std::result::Result<T, MultiError>;

fn full_frame(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1 << n) - 1
    }
}
