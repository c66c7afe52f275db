//! Multiscale flatness coefficients on finite weighted metric spaces.
//!
//! The crate computes β-, κ- and ι-numbers, builds dyadic cube systems and
//! Carleson packing sums, constructs anchor-based maps into ℝ, and checks the
//! Euclidean and Heisenberg plane inequalities numerically.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carleson;
pub mod coeffs;
pub mod covering;
pub mod dyadic;
pub mod error;
pub mod generate;
pub mod heisenberg;
pub mod io;
pub mod linalg;
pub mod menger;
pub mod planes;
pub mod space;
pub mod suites;

pub use coeffs::{
    beta, iota_estimate, iota_plane, kappa, menger_curvature, triangular_excess, CoefficientValue, IotaBracket,
    IotaOptions, KappaOptions, Mode, PlaneSource, Witness,
};
pub use dyadic::{build_dyadic, Cube, CubeId, DyadicSystem};
pub use error::{Error, Result};
pub use generate::{generate, GeneratorKind, GeneratorSpec};
pub use heisenberg::{HeisPoint, HorizontalPlane};
pub use menger::{CircularityReport, EmbeddingWitness};
pub use planes::AffinePlane;
pub use space::{Ambient, MetricSpace, PointSet};
