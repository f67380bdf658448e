//! Sparse storage and the direct solver used by both field solvers.

pub mod csr;
pub mod multifrontal;
pub mod ordering;

pub use csr::{CsrMatrix, Pattern};
pub use multifrontal::{DirectSolver, FactorDiagnostics, FactorOptions, LdltFactor, SolveReport};
pub use ordering::Ordering;
