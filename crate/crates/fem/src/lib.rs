//! Finite-element machinery for the structural benchmarks.
//!
//! Everything here works on structured rectangular meshes of bilinear
//! quadrilaterals: a plane-stress element for the cantilever, a Mindlin
//! plate element with selective reduced integration, a banded Cholesky
//! solver, and Nyström discretisations of separable Gaussian-kernel
//! Karhunen-Loève expansions used to build random Young's-modulus fields.

pub mod banded;
pub mod error;
pub mod kl;
pub mod mesh;
pub mod mindlin;
pub mod plane_stress;
pub mod quadrature;

pub use banded::{AssembledSystem, BandedSpd};
pub use error::FemError;
pub use kl::{kl_eigenpairs_1d, young_modulus, KlBasis, KlEigenpairs1d};
pub use mesh::{NodeOrdering, StructuredMesh};
pub use mindlin::{assemble_mindlin, MindlinProperties};
pub use plane_stress::{assemble_plane_stress, PointLoad};

pub type Result<T> = std::result::Result<T, FemError>;
