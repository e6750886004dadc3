//! Dense complex linear algebra, operator bases and state fixtures.

pub mod basis;
pub mod matrix;
pub mod random;
pub mod state;
pub mod svd;

pub use basis::{
    gell_mann_basis, hermitian_basis, heisenberg_weyl_basis, pauli_basis, phase_point_operators, OperatorBasis,
};
pub use matrix::{kron, ComplexMatrix};
pub use state::{
    bell_state, max_entangled, random_density, random_pure_state, realign, unrealign, BipartiteState, Povm,
};
pub use svd::{svd, Svd};
