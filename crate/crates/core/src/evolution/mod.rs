//! Time-ordered propagation, 1+1 lattice engines and Clifford-valued observables.

pub mod engine;
pub mod kg;
pub mod observables;
pub mod propagate;

pub use engine::{dirac_evolve_1p1, Boundary, EngineKind, EvolutionConfig, LatticeState, SplitStep};
pub use kg::{kg_first_order, kg_from_first_order, kg_leapfrog};
pub use observables::{
    dirac_beta, dirac_hermiticity_residual, momentum_component, momentum_expectation, momentum_operator,
    spin_vector_assemble, stress_energy_contract, stress_energy_contract_with, SliceGeometry, SpinVector,
};
pub use propagate::time_ordered_evolve;
