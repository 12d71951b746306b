//! Two-component reduction of the Klein-Gordon equation and a leapfrog reference solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::I;

use super::engine::{Boundary, LatticeState};

/// `ψ = (φ + (iħ/m) ∂_tφ, φ - (iħ/m) ∂_tφ)` with `c = 1`.
pub fn kg_first_order(phi: &[Complex64], phi_dot: &[Complex64], m: f64, hbar: f64, dx: f64) -> Result<LatticeState> {
    if m == 0.0 {
        return Err(Error::ZeroMass);
    }
    if phi.len() != phi_dot.len() {
        return Err(Error::DimensionMismatch(format!("φ has {} samples, ∂_tφ has {}", phi.len(), phi_dot.len())));
    }
    let f = I * hbar / m;
    let mut s = LatticeState::zeros(phi.len(), dx, 2);
    for (j, (p, pd)) in phi.iter().zip(phi_dot).enumerate() {
        s.data[2 * j] = p + f * pd;
        s.data[2 * j + 1] = p - f * pd;
    }
    Ok(s)
}

/// Inverse of [`kg_first_order`]: `φ = (ψ₁+ψ₂)/2`, `∂_tφ = (m/iħ)(ψ₁-ψ₂)/2`.
pub fn kg_from_first_order(state: &LatticeState, m: f64, hbar: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if m == 0.0 {
        return Err(Error::ZeroMass);
    }
    if state.components != 2 {
        return Err(Error::DimensionMismatch(format!("expected 2 components, got {}", state.components)));
    }
    let f = m / (I * hbar);
    let (phi, dot) = (0..state.n)
        .map(|j| {
            let (a, b) = (state.data[2 * j], state.data[2 * j + 1]);
            ((a + b) * 0.5, f * (a - b) * 0.5)
        })
        .unzip();
    Ok((phi, dot))
}

/// Second-order leapfrog for `φ_tt = φ_xx - m²φ` on a periodic three-point lattice,
/// started with a Taylor step.
#[derive(Debug, Clone)]
pub struct Leapfrog {
    prev: Option<Vec<Complex64>>,
    cur: Vec<Complex64>,
    dot0: Vec<Complex64>,
    m: f64,
    dx: f64,
    dt: f64,
}

impl Leapfrog {
    pub fn new(phi0: Vec<Complex64>, phi_dot0: Vec<Complex64>, m: f64, dx: f64, dt: f64) -> Self {
        Leapfrog { prev: None, cur: phi0, dot0: phi_dot0, m, dx, dt }
    }

    fn accel(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let n = phi.len();
        (0..n)
            .map(|j| {
                let lap = (phi[(j + 1) % n] - phi[j] * 2.0 + phi[(j + n - 1) % n]) / (self.dx * self.dx);
                lap - phi[j] * (self.m * self.m)
            })
            .collect()
    }

    pub fn step(&mut self) {
        let a = self.accel(&self.cur);
        let dt = self.dt;
        let next: Vec<Complex64> = match &self.prev {
            None => (0..a.len()).map(|j| self.cur[j] + self.dot0[j] * dt + a[j] * (0.5 * dt * dt)).collect(),
            Some(prev) => (0..a.len()).map(|j| self.cur[j] * 2.0 - prev[j] + a[j] * (dt * dt)).collect(),
        };
        self.prev = Some(std::mem::replace(&mut self.cur, next));
    }

    pub fn current(&self) -> &[Complex64] {
        &self.cur
    }
}

/// Runs [`Leapfrog`] for `steps` steps and returns `φ`.
pub fn kg_leapfrog(phi0: &[Complex64], phi_dot0: &[Complex64], m: f64, dx: f64, dt: f64, steps: usize, boundary: Boundary) -> Result<Vec<Complex64>> {
    if boundary != Boundary::Periodic {
        return Err(Error::NonPeriodic);
    }
    let mut lf = Leapfrog::new(phi0.to_vec(), phi_dot0.to_vec(), m, dx, dt);
    for _ in 0..steps {
        lf.step();
    }
    Ok(lf.cur)
}

/// Gaussian packet `φ(x) = exp(-(x-x0)²/2w²) e^{ikx}` with `∂_tφ` of the positive-frequency branch.
pub fn kg_gaussian(n: usize, dx: f64, x0: f64, w: f64, k: f64, m: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let omega = (m * m + k * k).sqrt();
    let phi: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = j as f64 * dx;
            (I * k * x).exp() * (-(x - x0).powi(2) / (2.0 * w * w)).exp()
        })
        .collect();
    let dot = phi.iter().map(|p| p * (-I * omega)).collect();
    (phi, dot)
}

/// Max-norm distance between two sampled fields.
pub fn field_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Runs the first-order engine and the leapfrog oracle from the same data and
/// returns the max difference of `φ` at the final time.
#[allow(clippy::too_many_arguments)]
pub fn kg_oracle_gap(n: usize, dx: f64, m: f64, dt: f64, steps: usize, x0: f64, w: f64, k: f64) -> Result<f64> {
    use super::engine::{EngineKind, EvolutionConfig, SplitStep};
    let (phi, dot) = kg_gaussian(n, dx, x0, w, k, m);
    let mut state = kg_first_order(&phi, &dot, m, 1.0, dx)?;
    let engine = SplitStep::new(EngineKind::Kg, n, dx, Boundary::Periodic, EvolutionConfig::free(dt, steps, m))?;
    engine.run(&mut state, |_, _, _| Ok(()))?;
    let (phi_fo, _) = kg_from_first_order(&state, m, 1.0)?;
    let phi_lf = kg_leapfrog(&phi, &dot, m, dx, dt, steps, Boundary::Periodic)?;
    Ok(field_distance(&phi_fo, &phi_lf))
}
