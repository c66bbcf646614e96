//! Finite volume schemes for scalar conservation laws `∂_t u + div_g f(u, x) = 0`
//! on the round sphere and the flat torus.
//!
//! Everything is generic over the scalar type through [`Real`] (implemented
//! for `f32` and `f64`); the aliases at the bottom fix it to `f64`.

pub mod diagnostics;
pub mod error;
pub mod flux;
pub mod geometry;
pub mod mesh;
pub mod numflux;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use diagnostics::{
    default_c_grid, discrete_tv, entropy_residuals, equispaced_grid, l1_distance, l1_error_vs_function, mass,
    DiagnosticRecord, Diagnostics, DiagnosticsSummary, EntropyResidualReport,
};
pub use error::{FvError, Result};
pub use flux::{data_range, FluxKind, FluxModel, VelocityField};
pub use geometry::{Manifold, Point, TangentVector};
pub use mesh::{Mesh, MeshExport, MeshKind, ShapeAudit, MAX_ICOSPHERE_LEVEL};
pub use numflux::{
    verify_bound_fluxes, verify_flux_axioms, Axiom, BoundFluxes, FaceFluxScheme, FaceNormalFlux, FluxAxiomReport,
};
pub use scalar::{compensated_sum, Real};
pub use solver::{cfl_timestep, project_initial, RunSummary, Solver, State, StepBreakdown, StepObserver};

pub type Manifold64 = Manifold<f64>;
pub type Point64 = Point<f64>;
pub type Mesh64 = Mesh<f64>;
pub type Mesh32 = Mesh<f32>;
pub type FluxModel64 = FluxModel<f64>;
pub type State64 = State<f64>;
pub type State32 = State<f32>;
pub type Solver64<'m> = Solver<'m, f64>;
