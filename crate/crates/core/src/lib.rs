//! Clifford algebras, spinor geometry on coordinate charts, and the
//! fibre-bundle description of quantum evolution.
//!
//! The crate is organised bottom-up:
//!
//! * [`clifford`]: blade arithmetic for real Cl(p,q) and matrix-representation checks.
//! * [`gamma`]: Dirac-basis gamma matrices, dual bases, SL(2,C) embedding, spin rotations.
//! * [`geometry`]: vierbeins, Christoffel symbols, spin connections and curved Dirac operators.
//! * [`bundle`]: trivializations, evolution transports, connections and path derivations.
//! * [`evolution`]: time-ordered propagation, 1+1D Dirac and Klein-Gordon engines, and
//!   Clifford-valued observables.
//! * [`experiment`]: JSON-configured runs producing CSV time series and trajectory fields.
//! * [`verify`]: the invariant checks behind `cliffbundle verify`.

pub mod bundle;
pub mod clifford;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod gamma;
pub mod geometry;
pub mod linalg;
pub mod verify;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult};
pub use gamma::{dirac_gammas, Convention, MatrixRep};
pub use geometry::{ChartMetric, MetricConfig};
pub use verify::{run_suite, Check, Suite, VerificationReport, VerifyOptions};
