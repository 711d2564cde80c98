//! A 2D P1 finite element solver for semilinear stochastic PDEs
//! `du = [lap u + f(u)] dt + g(u) dW` with Neumann boundary conditions,
//! polynomial one-sided Lipschitz drifts (e.g. `f(u) = u - u^q`), and
//! function-type multiplicative noise.
//!
//! Time stepping is implicit Euler-Maruyama with the drift discretized by
//! nodal interpolation; the implicit system is solved by Newton with
//! Krylov inner solves. A Monte Carlo layer estimates moment-stability
//! series and strong-convergence error tables over nested mesh
//! hierarchies with shared Wiener paths.

// `!(x > 0.0)` guards deliberately reject NaN; index loops mirror the
// matrix notation of the assembly kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod fem;
pub mod ic;
pub mod mesh;
pub mod model;
pub mod montecarlo;
pub mod paths;
pub mod postproc;
pub mod scheme;
pub mod sparse;

pub use error::{Error, Result};
pub use fem::{
    assemble_mass, assemble_stiffness, norm_linf_nodal, prolongate, Discretization, FieldVector,
    QuadratureRule,
};
pub use ic::InitialCondition;
pub use mesh::{Mesh, MeshCheckReport, Point, ProlongationMap, Rect};
pub use model::{DiffusionKind, DiffusionSpec, DriftSpec, ModelSpec};
pub use montecarlo::{
    convergence_rates, run_ensemble, strong_error_study, EnsembleConfig, ErrorTableRow,
    MeshHierarchy, MomentSeries,
};
pub use paths::{derive_sample_seed, mix64, WienerPath};
pub use postproc::{zero_level_set, LevelSetPolyline};
pub use scheme::{MomentSample, NoiseLoad, SchemeConfig, SchemeOperator, StepDiagnostics, Trajectory};
pub use sparse::{bicgstab_solve, cg_solve, SolveReport, SparseMatrix};
