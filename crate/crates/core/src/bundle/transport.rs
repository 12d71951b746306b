//! Hilbert propagators, evolution transports along paths, their connection,
//! and derivations of sections along paths.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, I};

use super::trivialization::Trivialization;

/// Two-parameter family `𝒰(t,s)` on the reference Hilbert space.
pub trait Propagator: Send + Sync {
    fn dim(&self) -> usize;
    fn evolve(&self, t: f64, s: f64) -> CMat;
}

/// Closure-backed propagator; the closure must satisfy `𝒰(s,s) = 1` itself.
pub struct FnPropagator {
    d: usize,
    f: Box<dyn Fn(f64, f64) -> CMat + Send + Sync>,
}

impl FnPropagator {
    pub fn new(d: usize, f: impl Fn(f64, f64) -> CMat + Send + Sync + 'static) -> Self {
        FnPropagator { d, f: Box::new(f) }
    }
}

impl Propagator for FnPropagator {
    fn dim(&self) -> usize {
        self.d
    }
    fn evolve(&self, t: f64, s: f64) -> CMat {
        (self.f)(t, s)
    }
}

type Generator = Box<dyn Fn(f64) -> CMat + Send + Sync>;

/// Propagator assembled from per-step factors on a uniform grid.
///
/// Stores the prefix products `O_k = S_{k-1} ⋯ S_0` and evaluates
/// `𝒰(t,s) = O(t) O(s)⁻¹`, where `O(t)` extends `O_k` by a partial step.
/// Identity and cocycle laws therefore hold up to rounding.
pub struct SteppedPropagator {
    d: usize,
    t0: f64,
    tau: f64,
    prefix: Vec<CMat>,
    /// `K(t, δ)`: the exponent of a partial step of length δ starting at grid time t.
    partial: Box<dyn Fn(usize, f64, f64) -> CMat + Send + Sync>,
    unitary: bool,
}

impl fmt::Debug for SteppedPropagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SteppedPropagator")
            .field("d", &self.d)
            .field("t0", &self.t0)
            .field("tau", &self.tau)
            .field("steps", &(self.prefix.len() - 1))
            .finish()
    }
}

impl SteppedPropagator {
    /// Midpoint exponentials `exp(-(i/ħ) H(t_k + τ/2) τ)` of a Hamiltonian path.
    pub fn from_hamiltonian(h: impl Fn(f64) -> CMat + Send + Sync + 'static, hbar: f64, t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t1 > t0) {
            return Err(Error::DegenerateStep { eps: t1 - t0, reason: "need t1 > t0 and at least one step".into() });
        }
        let d = h(t0).nrows();
        let tau = (t1 - t0) / steps as f64;
        let scale = -I / hbar;
        let h: Generator = Box::new(h);
        let partial = move |_k: usize, tk: f64, delta: f64| h(tk + 0.5 * delta).map(|z| z * scale * delta);
        Ok(Self::build(d, t0, tau, steps, Box::new(partial), true))
    }

    /// Piecewise-constant random Hermitian generators, one per step.
    pub fn random_unitary(d: usize, seed: u64, t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t1 > t0) {
            return Err(Error::DegenerateStep { eps: t1 - t0, reason: "need t1 > t0 and at least one step".into() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // One extra generator covers evaluation slightly past t1.
        let gens: Vec<CMat> = (0..=steps).map(|_| linalg::random_hermitian(&mut rng, d).map(|z| z * -I)).collect();
        let tau = (t1 - t0) / steps as f64;
        let partial = move |k: usize, _tk: f64, delta: f64| gens[k.min(gens.len() - 1)].map(|z| z * delta);
        Ok(Self::build(d, t0, tau, steps, Box::new(partial), true))
    }

    fn build(d: usize, t0: f64, tau: f64, steps: usize, partial: Box<dyn Fn(usize, f64, f64) -> CMat + Send + Sync>, unitary: bool) -> Self {
        let mut prefix = Vec::with_capacity(steps + 1);
        prefix.push(linalg::eye(d));
        for k in 0..steps {
            let tk = t0 + k as f64 * tau;
            let step = linalg::expm(&partial(k, tk, tau));
            let next = step * &prefix[k];
            prefix.push(next);
        }
        SteppedPropagator { d, t0, tau, prefix, partial, unitary }
    }

    pub fn steps(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn step_size(&self) -> f64 {
        self.tau
    }

    /// `O(t) = 𝒰(t, t0)`; times outside the grid extend the nearest step.
    pub fn from_start(&self, t: f64) -> CMat {
        let raw = ((t - self.t0) / self.tau).floor();
        let k = raw.clamp(0.0, self.steps() as f64) as usize;
        let tk = self.t0 + k as f64 * self.tau;
        let delta = t - tk;
        if delta == 0.0 {
            return self.prefix[k].clone();
        }
        linalg::expm(&(self.partial)(k, tk, delta)) * &self.prefix[k]
    }

    fn inverse_of(&self, m: CMat) -> CMat {
        if self.unitary {
            m.adjoint()
        } else {
            m.try_inverse().expect("step factors are exponentials and hence invertible")
        }
    }
}

impl Propagator for SteppedPropagator {
    fn dim(&self) -> usize {
        self.d
    }
    fn evolve(&self, t: f64, s: f64) -> CMat {
        if t == s {
            return linalg::eye(self.d);
        }
        self.from_start(t) * self.inverse_of(self.from_start(s))
    }
}

/// Path `γ : [t0, t1] → chart`.
#[derive(Clone)]
pub struct PathSpec {
    pub gamma: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
}

impl fmt::Debug for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PathSpec([{}, {}], samples = {})", self.t0, self.t1, self.samples)
    }
}

impl PathSpec {
    pub fn new(gamma: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static, t0: f64, t1: f64, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::TooFewSamples { need: 2, got: samples });
        }
        if !(t1 > t0) {
            return Err(Error::DegenerateStep { eps: t1 - t0, reason: "path domain is empty".into() });
        }
        Ok(PathSpec { gamma: Arc::new(gamma), t0, t1, samples })
    }

    /// The observer at rest: `γ(t) = (t, x0...)`.
    pub fn worldline(x0: Vec<f64>, t0: f64, t1: f64, samples: usize) -> Result<Self> {
        Self::new(
            move |t| {
                let mut p = vec![t];
                p.extend_from_slice(&x0);
                p
            },
            t0,
            t1,
            samples,
        )
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        (self.gamma)(t)
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let h = (self.t1 - self.t0) / (self.samples - 1) as f64;
        (0..self.samples).map(|k| self.t0 + k as f64 * h).collect()
    }

    /// Default derivative step `1e-4 · (t1 - t0)`.
    pub fn default_eps(&self) -> f64 {
        1e-4 * (self.t1 - self.t0)
    }
}

/// `U_γ(t,s) = l⁻¹_{γ(t)} 𝒰(t,s) l_{γ(s)}`.
#[derive(Clone)]
pub struct TransportOperator {
    pub propagator: Arc<dyn Propagator>,
    pub trivialization: Arc<dyn Trivialization>,
    pub path: PathSpec,
}

impl fmt::Debug for TransportOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransportOperator(d = {}, {:?}, {:?})", self.propagator.dim(), self.trivialization, self.path)
    }
}

pub fn evolution_transport(propagator: Arc<dyn Propagator>, trivialization: Arc<dyn Trivialization>, path: PathSpec) -> Result<TransportOperator> {
    if propagator.dim() != trivialization.fibre_dim() {
        return Err(Error::DimensionMismatch(format!(
            "propagator acts on dimension {}, fibres have dimension {}",
            propagator.dim(),
            trivialization.fibre_dim()
        )));
    }
    Ok(TransportOperator { propagator, trivialization, path })
}

impl TransportOperator {
    pub fn dim(&self) -> usize {
        self.propagator.dim()
    }

    pub fn u(&self, t: f64, s: f64) -> Result<CMat> {
        let l_inv = self.trivialization.l_inv(&self.path.at(t))?;
        Ok(l_inv * self.propagator.evolve(t, s) * self.trivialization.l(&self.path.at(s)))
    }

    /// `‖U(t,t) - 1‖_max`.
    pub fn identity_residual(&self, t: f64) -> Result<f64> {
        Ok(linalg::max_diff(&self.u(t, t)?, &linalg::eye(self.dim())))
    }

    /// `‖U(t,s)U(s,r) - U(t,r)‖_max`.
    pub fn cocycle_residual(&self, t: f64, s: f64, r: f64) -> Result<f64> {
        Ok(linalg::max_diff(&(self.u(t, s)? * self.u(s, r)?), &self.u(t, r)?))
    }

    /// Lifts a Hilbert-space state at `t` into the fibre over `γ(t)`.
    pub fn lift_at(&self, t: f64, psi: &CVec) -> Result<CVec> {
        super::trivialization::lift_state(self.trivialization.as_ref(), &self.path.at(t), psi)
    }
}

fn check_eps(s: f64, eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::DegenerateStep { eps, reason: "step must be positive and finite".into() });
    }
    if eps < 1e-9 * s.abs().max(1.0) {
        return Err(Error::DegenerateStep { eps, reason: "step is below the cancellation floor".into() });
    }
    Ok(())
}

/// `Γ(s) = ∂_t U_γ(s,t)|_{t=s}` by central differences.
pub fn connection_from_transport(u: &TransportOperator, s: f64, eps: f64) -> Result<CMat> {
    check_eps(s, eps)?;
    Ok((u.u(s, s + eps)? - u.u(s, s - eps)?).map(|z| z / (2.0 * eps)))
}

/// `-∂_t U_γ(t,s)|_{t=s}`; agrees with [`connection_from_transport`] to O(ε²).
pub fn connection_from_transport_forward(u: &TransportOperator, s: f64, eps: f64) -> Result<CMat> {
    check_eps(s, eps)?;
    Ok((u.u(s - eps, s)? - u.u(s + eps, s)?).map(|z| z / (2.0 * eps)))
}

/// `Γ = (i/ħ) H`.
pub fn connection_from_hamiltonian(h: &CMat, hbar: f64) -> CMat {
    h.map(|z| z * I / hbar)
}

/// `H = -iħ Γ`.
pub fn hamiltonian_from_connection(gamma: &CMat, hbar: f64) -> CMat {
    gamma.map(|z| z * -I * hbar)
}

/// `H(t) = iħ ∂_t U(t,t0) · U(t0,t)`.
pub fn hamiltonian_from_transport(u: &TransportOperator, t0: f64, t: f64, eps: f64, hbar: f64) -> Result<CMat> {
    check_eps(t, eps)?;
    let du = (u.u(t + eps, t0)? - u.u(t - eps, t0)?).map(|z| z / (2.0 * eps));
    Ok((du * u.u(t0, t)?).map(|z| z * I * hbar))
}

/// A section `λ_γ(t)` of the pulled-back bundle.
pub trait Lifting {
    fn value(&self, t: f64) -> Result<CVec>;

    /// Sample spacing for sampled liftings; `None` for exact callbacks.
    fn spacing(&self) -> Option<f64> {
        None
    }
}

pub struct FnLifting<F: Fn(f64) -> CVec>(pub F);

impl<F: Fn(f64) -> CVec> Lifting for FnLifting<F> {
    fn value(&self, t: f64) -> Result<CVec> {
        Ok((self.0)(t))
    }
}

/// Uniformly sampled section with four-point Lagrange interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionAlongPath {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<CVec>,
}

impl SectionAlongPath {
    pub fn new(t0: f64, dt: f64, values: Vec<CVec>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::TooFewSamples { need: 4, got: values.len() });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::NonUniformSamples);
        }
        Ok(SectionAlongPath { t0, dt, values })
    }

    /// Samples `Ψ_γ(t_k) = U_γ(t_k, t_0) Ψ_0` at the path's sample times.
    pub fn transported(u: &TransportOperator, psi0: &CVec) -> Result<Self> {
        let times = u.path.sample_times();
        let values = times.iter().map(|&t| u.u(t, times[0]).map(|m| m * psi0)).collect::<Result<_>>()?;
        Self::new(times[0], times[1] - times[0], values)
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.values.len() - 1) as f64 * self.dt
    }
}

impl Lifting for SectionAlongPath {
    fn value(&self, t: f64) -> Result<CVec> {
        let n = self.values.len();
        let pos = (t - self.t0) / self.dt;
        if pos < -1e-9 || pos > (n - 1) as f64 + 1e-9 {
            return Err(Error::DegenerateStep { eps: t, reason: "time outside the sampled section".into() });
        }
        let k = pos.round();
        if (pos - k).abs() < 1e-12 {
            return Ok(self.values[k as usize].clone());
        }
        let base = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut out = CVec::zeros(self.values[0].len());
        for j in 0..4 {
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    w *= (pos - (base + m) as f64) / (j as f64 - m as f64);
                }
            }
            out += &self.values[base + j] * c(w, 0.0);
        }
        Ok(out)
    }

    fn spacing(&self) -> Option<f64> {
        Some(self.dt)
    }
}

fn check_lifting_step(lifting: &dyn Lifting, s: f64, eps: f64) -> Result<()> {
    check_eps(s, eps)?;
    if let Some(h) = lifting.spacing() {
        if eps > h * (1.0 + 1e-12) {
            return Err(Error::DegenerateStep { eps, reason: format!("step exceeds the sample spacing {h}") });
        }
    }
    Ok(())
}

/// `D^γ_s(λ) ≈ [U_γ(s,s+ε) λ(s+ε) - λ(s)] / ε`.
pub fn path_derivation(lifting: &dyn Lifting, u: &TransportOperator, s: f64, eps: f64) -> Result<CVec> {
    check_lifting_step(lifting, s, eps)?;
    let ahead = u.u(s, s + eps)? * lifting.value(s + eps)?;
    Ok((ahead - lifting.value(s)?).map(|z: Complex64| z / eps))
}

/// Local form `dλ/ds + Γ(s) λ(s)` with a forward difference and the central-difference connection.
pub fn path_derivation_local(lifting: &dyn Lifting, u: &TransportOperator, s: f64, eps: f64) -> Result<CVec> {
    check_lifting_step(lifting, s, eps)?;
    let here = lifting.value(s)?;
    let d = (lifting.value(s + eps)? - &here).map(|z| z / eps);
    Ok(d + connection_from_transport(u, s, eps)? * here)
}
