//! Trivializations, evolution transports along paths, and their connections.

pub mod transport;
pub mod trivialization;

pub use transport::{
    connection_from_hamiltonian, connection_from_transport, connection_from_transport_forward, evolution_transport,
    hamiltonian_from_connection, hamiltonian_from_transport, path_derivation, path_derivation_local, FnLifting,
    FnPropagator, Lifting, PathSpec, Propagator, SectionAlongPath, SteppedPropagator, TransportOperator,
};
pub use trivialization::{
    bundle_gammas, bundle_relation_residual, conjugate_operator, lift_state, project_state, FnTrivialization,
    IdentityTrivialization, RandomSmoothTrivialization, ScalarTrivialization, Trivialization, TrivializationConfig,
};
