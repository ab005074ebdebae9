//! Numerical laboratory for rank-one ECS model manifolds.
//!
//! A model is the manifold `I × ℝ × V` with metric `κ dt² + dt ds + ⟨·,·⟩`,
//! `κ(t, s, v) = f(t)⟨v, v⟩ + ⟨Av, v⟩`, where `(V, ⟨·,·⟩)` is pseudo-Euclidean
//! and `A` is traceless self-adjoint. The crate builds these models, evaluates
//! their curvature analytically, implements their isometry groups and the
//! symplectic space of solutions of `ü = f u + A u`, and integrates geodesics.
//!
//! Module map:
//!
//! * [`pseudo_linear`]: inner products of arbitrary signature, genericity,
//!   the canonical basis of a generic nilpotent endomorphism.
//! * [`model_geometry`]: profiles, the model metric, curvature tensors.
//! * [`solution_space`]: solutions, the form `Ω` and the Heisenberg group.
//! * [`isometry_group`]: the group `S ⋉ H` and its action.
//! * [`homogeneous`]: standard homogeneous models, `σ_q`, its generator and
//!   the transitive-commutation machinery.
//! * [`geodesics`]: geodesics, parallel transport, variations and the
//!   reconstruction map.
//! * [`report`] and [`suites`]: named residual checks used by the CLI and
//!   the acceptance tests.

pub mod error;
pub mod geodesics;
pub mod homogeneous;
pub mod io;
pub mod isometry_group;
pub mod linalg;
pub mod model_geometry;
pub mod ode;
pub mod pseudo_linear;
pub mod report;
pub mod solution_space;
pub mod spectra;
pub mod suites;

pub use error::{LabError, Result};
pub use homogeneous::{G0Element, HomogeneousModel, SpectralSplit};
pub use isometry_group::{Holonomy, IsoElement, SElement};
pub use model_geometry::{ChartPoint, CurvaturePack, Interval, ModelManifold, ProfileF};
pub use pseudo_linear::{Endo, FitBasis, PseudoEuclideanSpace};
pub use report::{Check, VerificationReport};
pub use solution_space::{HeisenbergElement, SolutionE};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
