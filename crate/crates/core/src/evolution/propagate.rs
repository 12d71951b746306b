//! Time-ordered evolution of finite-dimensional states.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, I};

/// Hermiticity tolerance for Hamiltonians fed to the integrator.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Midpoint-exponential product `∏ exp(-(i/ħ) H(t_k + dt/2) dt)` applied to `psi0`.
///
/// Returns `(ψ(t1), 𝒰(t1, t0))`.
pub fn time_ordered_evolve(h: impl Fn(f64) -> CMat, psi0: &CVec, t0: f64, t1: f64, steps: usize, hbar: f64) -> Result<(CVec, CMat)> {
    if steps == 0 {
        return Err(Error::DegenerateStep { eps: 0.0, reason: "at least one step is required".into() });
    }
    let dt = (t1 - t0) / steps as f64;
    let d = psi0.len();
    let mut u = linalg::eye(d);
    for k in 0..steps {
        let hk = h(t0 + (k as f64 + 0.5) * dt);
        if hk.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("H is {:?}, state has {d} components", hk.shape())));
        }
        let residual = linalg::hermiticity_residual(&hk);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        u = linalg::expm(&hk.map(|z| z * -I * dt / hbar)) * u;
    }
    Ok((&u * psi0, u))
}
