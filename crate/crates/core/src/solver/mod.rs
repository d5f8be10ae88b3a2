//! Sparse linear algebra and the Newton driver.

pub mod lu;
pub mod newton;
pub mod sparse;

pub use lu::{lu_factorize, LuFactorization, LuSolver};
pub use newton::{newton_solve, NewtonProblem, NewtonReport, NewtonSettings, StopCriterion};
pub use sparse::{Pattern, SparseMatrix};
