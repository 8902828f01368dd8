//! Bosonic many-body Hamiltonians: a mode-basis representation for pairwise interactions
//! and first-quantized grid tensors for the Dyson potential.

pub mod basis;
pub mod dyson;
pub mod firstq;
pub mod modes;
pub mod study;

pub use basis::{SparseMatrix, SymmetricBasis};
pub use dyson::{dyson_pointwise_check, DysonPointwiseReport};
pub use firstq::{
    build_dyson_hamiltonian, build_wn, second_moment_identity_check, second_moment_ratio, DysonHamiltonian, DysonParams,
    FirstQuantizedState,
};
pub use modes::{
    build_mode_hamiltonian, condensate_distance, depletion, ground_state, ground_state_with_witness, perturbation_expectation,
    product_state, rdm, DensityMatrix, HartreeResult, ModeHamiltonian, PerturbationReport, PerturbationSpec,
    PerturbedHamiltonian,
};
pub use study::{convergence_study, ConvergenceRow, ConvergenceStudy, Scaling, StudyOptions};
