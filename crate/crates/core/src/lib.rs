//! Nonsmooth trust-region bundle method with cutting-plane oracles.

pub mod driver;
pub mod error;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod oracles;
pub mod problems;
pub mod qp;
pub mod tangent;

pub use driver::{
    solve, InnerOutcome, IterationRecord, QPolicy, SolveResult, SolveStatus, SolveTrace, SolverConfig, StepKind,
    TrialMode,
};
pub use error::{Result, SolverError};
pub use linalg::{Matrix, Vector};
pub use model::{
    model_value, plane_value, second_order_value, update_working_model, BundlePolicy, Plane, PlaneTag,
    Polyhedron, TangentOrigin, WorkingModel,
};
pub use objective::{MaxOfQuadratics, Objective, ProxSplit, Quadratic};
pub use oracles::{CutOracle, DownshiftParams, OracleKind, OracleReport};
pub use problems::{parse_problem, NamedProblem, PROBLEM_NAMES};
pub use tangent::{
    aggregate_from_solution, kkt_residual, solve_tangent_program, TangentSolution, TangentStatus,
};
