//! Left-invariant metrics on Lie groups with prescribed curvature nullity:
//! subspace arithmetic, Lie algebra data, Killing-field geometry at the
//! identity, the nullity hierarchy, the ℝⁿ⋊so(3) construction, and
//! numerical flows in left trivialization.

pub mod cli;
pub mod construction;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod lie;
pub mod model_file;
pub mod nullity;
pub mod representation;
pub mod subspace;

pub use error::{Error, Result};
pub use geometry::HomogeneousModel;
pub use lie::LieAlgebra;
pub use subspace::Subspace;

/// Environment variable overriding the global rank tolerance.
pub const TOL_ENV: &str = "NULLITYLAB_TOL";
