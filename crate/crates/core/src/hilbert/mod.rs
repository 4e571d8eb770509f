//! Tensor-product spin spaces, magnetization sectors and sparse operators.

mod operator;
mod sector;
mod space;
mod spin;

pub use operator::{embed_at, LinearMap, SparseOperator, DROP_TOL, HERMITIAN_TOL};
pub use sector::{SectorBasis, SectorLabel, SCAN_LIMIT};
pub use space::SpinSpace;
pub use spin::{hermitian_unit_basis, spin_matrices, SpinMatrices};
