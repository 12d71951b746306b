//! Chart metrics, frames, connections and curved-space Dirac operators.

pub mod dirac;
pub mod frame;
pub mod lattice;
pub mod metric;

pub use dirac::{covariant_derivative_spinor, curved_dirac_apply, dalembert_factorization_check, DalembertReport};
pub use frame::{
    christoffel_at, metric_compatibility_residual, spin_connection_at, spin_connection_with_step, spin_curvature_at,
    vierbein_at, Christoffel, ConnectionData, SpinConnection, Vierbein, DEFAULT_STEP,
};
pub use lattice::{Field, Grid};
pub use metric::{ChartMetric, ConstantMetric, FnMetric, Frw1p1, MetricConfig, MetricKind, Minkowski, PolarFlat2d, Rindler1p1};
