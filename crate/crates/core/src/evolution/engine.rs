//! Periodic 1D lattice states and split-step evolution engines.
//!
//! Every engine has the form `H = K(-i∂) + V(x)` with a translation-invariant
//! kinetic part, diagonalized per Fourier mode, and a site-local potential.
//! One step is `exp(-iV dt/2) F⁻¹ exp(-iK_k dt) F exp(-iV dt/2)`; without a
//! potential the step is the exact exponential of the discretized `H`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{Convention, MatrixRep};
use crate::linalg::{self, c, CMat, CVec, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// `N` sites times `components` values, site-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub n: usize,
    pub dx: f64,
    pub components: usize,
    pub data: Vec<Complex64>,
    pub boundary: Boundary,
}

impl LatticeState {
    pub fn zeros(n: usize, dx: f64, components: usize) -> Self {
        LatticeState { n, dx, components, data: vec![c(0.0, 0.0); n * components], boundary: Boundary::Periodic }
    }

    pub fn from_fn(n: usize, dx: f64, components: usize, f: impl Fn(f64) -> Vec<Complex64>) -> Self {
        let mut s = Self::zeros(n, dx, components);
        for j in 0..n {
            let v = f(j as f64 * dx);
            s.data[j * components..(j + 1) * components].copy_from_slice(&v);
        }
        s
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn site(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.components..(j + 1) * self.components]
    }

    /// `Σ |ψ|² Δx`.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn normalize(&mut self) {
        let n = self.norm().sqrt();
        if n > 0.0 {
            for z in &mut self.data {
                *z /= n;
            }
        }
    }

    pub fn as_vector(&self) -> CVec {
        CVec::from_column_slice(&self.data)
    }

    pub fn max_diff(&self, other: &LatticeState) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub m: f64,
    #[serde(default)]
    pub e: f64,
    /// Scalar potential per site; empty means zero.
    #[serde(default)]
    pub a0: Vec<f64>,
    /// Spatial potential per site; empty means zero.
    #[serde(default)]
    pub a1: Vec<f64>,
}

impl EvolutionConfig {
    pub fn free(dt: f64, steps: usize, m: f64) -> Self {
        EvolutionConfig { dt, steps, hbar: 1.0, m, e: 0.0, a0: Vec::new(), a1: Vec::new() }
    }

    fn potential_at(v: &[f64], j: usize) -> f64 {
        v.get(j).copied().unwrap_or(0.0)
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn check_lengths(&self, n: usize) -> Result<()> {
        for (name, v) in [("a0", &self.a0), ("a1", &self.a1)] {
            if !v.is_empty() && v.len() != n {
                return Err(Error::DimensionMismatch(format!("{name} has {} samples, lattice has {n}", v.len())));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || !(self.hbar > 0.0) {
            return Err(Error::Config("dt and hbar must be positive".into()));
        }
        Ok(())
    }
}

/// Engine kinds selectable in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Dirac1p1,
    Schrodinger,
    Kg,
}

impl EngineKind {
    pub fn components(&self) -> usize {
        match self {
            EngineKind::Schrodinger => 1,
            _ => 2,
        }
    }
}

/// Angular wavenumber of FFT bin `j`.
pub fn wavenumber(j: usize, n: usize, dx: f64) -> f64 {
    let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * jj / (n as f64 * dx)
}

/// Symbol of the central first difference, `sin(kΔx)/Δx`.
pub fn central_symbol(k: f64, dx: f64) -> f64 {
    (k * dx).sin() / dx
}

/// Symbol of minus the three-point Laplacian, `(4/Δx²) sin²(kΔx/2)`.
pub fn laplacian_symbol(k: f64, dx: f64) -> f64 {
    let s = (0.5 * k * dx).sin();
    4.0 * s * s / (dx * dx)
}

/// Dirac `α = γ⁰γ¹` and `β = γ⁰` from the mostly-minus 1+1 representation.
pub fn dirac_alpha_beta() -> (CMat, CMat) {
    let rep = MatrixRep::lorentzian_2d(Convention::MostlyMinus);
    (&rep.gammas[0] * &rep.gammas[1], rep.gammas[0].clone())
}

pub struct SplitStep {
    pub kind: EngineKind,
    pub n: usize,
    pub dx: f64,
    pub cfg: EvolutionConfig,
    d: usize,
    kinetic_step: Vec<CMat>,
    potential_half: Option<Vec<CMat>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SplitStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitStep").field("kind", &self.kind).field("n", &self.n).field("dx", &self.dx).finish()
    }
}

impl SplitStep {
    pub fn new(kind: EngineKind, n: usize, dx: f64, boundary: Boundary, cfg: EvolutionConfig) -> Result<Self> {
        if boundary != Boundary::Periodic {
            return Err(Error::NonPeriodic);
        }
        if n < 4 || !(dx.is_finite() && dx > 0.0) {
            return Err(Error::Config(format!("lattice needs n >= 4 and dx > 0 (got n = {n}, dx = {dx})")));
        }
        cfg.check_lengths(n)?;
        let max_a0 = EvolutionConfig::max_abs(&cfg.a0);
        let max_a1 = EvolutionConfig::max_abs(&cfg.a1);
        let bound = match kind {
            EngineKind::Dirac1p1 => 1.0 / dx + cfg.m.abs() + cfg.e.abs() * (max_a0 + max_a1),
            EngineKind::Schrodinger => {
                if cfg.m <= 0.0 {
                    return Err(Error::ZeroMass);
                }
                2.0 / (dx * dx * cfg.m) + cfg.e.abs() * max_a0
            }
            EngineKind::Kg => {
                if cfg.m <= 0.0 {
                    return Err(Error::ZeroMass);
                }
                if !cfg.a1.is_empty() && max_a1 > 0.0 {
                    return Err(Error::Config("the kg engine couples to a0 only".into()));
                }
                (cfg.m * cfg.m + 4.0 / (dx * dx)).sqrt() + cfg.e.abs() * max_a0
            }
        } / cfg.hbar;
        let product = cfg.dt * bound;
        if product >= 0.5 {
            return Err(Error::Stability { product, suggested_dt: 0.45 / bound });
        }

        let (alpha, beta) = dirac_alpha_beta();
        let scale = -I * cfg.dt / cfg.hbar;
        let d = kind.components();
        let kinetic_step = (0..n)
            .map(|j| {
                let k = wavenumber(j, n, dx);
                let hk = match kind {
                    EngineKind::Dirac1p1 => alpha.scale(cfg.hbar * central_symbol(k, dx)) + beta.scale(cfg.m),
                    EngineKind::Schrodinger => linalg::eye(1).scale(cfg.hbar * cfg.hbar * laplacian_symbol(k, dx) / (2.0 * cfg.m)),
                    EngineKind::Kg => feshbach_villars_symbol(cfg.m, laplacian_symbol(k, dx)),
                };
                linalg::expm(&hk.map(|z| z * scale))
            })
            .collect();
        let has_potential = cfg.e != 0.0 && (max_a0 > 0.0 || max_a1 > 0.0);
        let potential_half = has_potential.then(|| {
            (0..n)
                .map(|j| {
                    let a0 = EvolutionConfig::potential_at(&cfg.a0, j);
                    let a1 = EvolutionConfig::potential_at(&cfg.a1, j);
                    let v = match kind {
                        EngineKind::Dirac1p1 => linalg::eye(2).scale(cfg.e * a0) - alpha.scale(cfg.e * a1),
                        _ => linalg::eye(d).scale(cfg.e * a0),
                    };
                    linalg::expm(&v.map(|z| z * scale * 0.5))
                })
                .collect()
        });
        let mut planner = FftPlanner::new();
        Ok(SplitStep {
            kind,
            n,
            dx,
            d,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            kinetic_step,
            potential_half,
            cfg,
        })
    }

    fn apply_local(&self, mats: &[CMat], state: &mut LatticeState) {
        let d = self.d;
        let mut tmp = vec![c(0.0, 0.0); d];
        for (j, m) in mats.iter().enumerate() {
            let site = &mut state.data[j * d..(j + 1) * d];
            for (r, t) in tmp.iter_mut().enumerate() {
                *t = (0..d).map(|col| m[(r, col)] * site[col]).sum();
            }
            site.copy_from_slice(&tmp);
        }
    }

    fn check_state(&self, state: &LatticeState) -> Result<()> {
        if state.boundary != Boundary::Periodic {
            return Err(Error::NonPeriodic);
        }
        if state.n != self.n || state.components != self.d || (state.dx - self.dx).abs() > 1e-15 * self.dx {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{} at dx {}, engine expects {}x{} at dx {}",
                state.n, state.components, state.dx, self.n, self.d, self.dx
            )));
        }
        Ok(())
    }

    pub fn step(&self, state: &mut LatticeState) -> Result<()> {
        self.check_state(state)?;
        if let Some(p) = &self.potential_half {
            self.apply_local(p, state);
        }
        let (n, d) = (self.n, self.d);
        let mut modes: Vec<Vec<Complex64>> = (0..d).map(|a| (0..n).map(|j| state.data[j * d + a]).collect()).collect();
        for m in &mut modes {
            self.fft.process(m);
        }
        let mut tmp = vec![c(0.0, 0.0); d];
        for (j, k) in self.kinetic_step.iter().enumerate() {
            for (r, t) in tmp.iter_mut().enumerate() {
                *t = (0..d).map(|col| k[(r, col)] * modes[col][j]).sum();
            }
            for (a, t) in tmp.iter().enumerate() {
                modes[a][j] = *t;
            }
        }
        let inv_n = 1.0 / n as f64;
        for (a, m) in modes.iter_mut().enumerate() {
            self.ifft.process(m);
            for (j, z) in m.iter().enumerate() {
                state.data[j * d + a] = z * inv_n;
            }
        }
        if let Some(p) = &self.potential_half {
            self.apply_local(p, state);
        }
        Ok(())
    }

    /// Runs `cfg.steps` steps, calling `observe(step, t, state)` before the
    /// first step and after every step.
    pub fn run(&self, state: &mut LatticeState, mut observe: impl FnMut(usize, f64, &LatticeState) -> Result<()>) -> Result<()> {
        self.check_state(state)?;
        observe(0, 0.0, state)?;
        for s in 1..=self.cfg.steps {
            self.step(state)?;
            observe(s, s as f64 * self.cfg.dt, state)?;
        }
        Ok(())
    }
}

/// `H = τ3 (m + p²/2m) + iτ2 p²/2m` for the two-component Klein-Gordon field.
pub fn feshbach_villars_symbol(m: f64, p2: f64) -> CMat {
    let a = m + p2 / (2.0 * m);
    let b = p2 / (2.0 * m);
    CMat::from_row_slice(2, 2, &[c(a, 0.0), c(b, 0.0), c(-b, 0.0), c(-a, 0.0)])
}

/// `dirac_evolve_1p1`: evolves a copy of `state` and returns every intermediate state.
pub fn dirac_evolve_1p1(state: &LatticeState, cfg: &EvolutionConfig) -> Result<Vec<LatticeState>> {
    let engine = SplitStep::new(EngineKind::Dirac1p1, state.n, state.dx, state.boundary, cfg.clone())?;
    let mut s = state.clone();
    let mut out = Vec::with_capacity(cfg.steps + 1);
    engine.run(&mut s, |_, _, st| {
        out.push(st.clone());
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, dx: f64, x0: f64, w: f64, k: f64, spinor: [Complex64; 2]) -> LatticeState {
        let mut s = LatticeState::from_fn(n, dx, 2, |x| {
            let env = (-(x - x0).powi(2) / (2.0 * w * w)).exp();
            let ph = (I * k * x).exp() * env;
            vec![spinor[0] * ph, spinor[1] * ph]
        });
        s.normalize();
        s
    }

    #[test]
    fn alpha_beta_are_pauli() {
        let (a, b) = dirac_alpha_beta();
        let sx = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let sz = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert!(linalg::max_diff(&a, &sx) < 1e-15 && linalg::max_diff(&b, &sz) < 1e-15);
    }

    #[test]
    fn massless_chiral_wave_translates() {
        // α = σx: the +1 eigenvector (1,1)/√2 moves right at unit speed.
        let n = 256;
        let l = 40.0;
        let spinor = [c(1.0, 0.0), c(1.0, 0.0)];
        let mut errs = Vec::new();
        for factor in [1usize, 2] {
            let nn = n * factor;
            let dx = l / nn as f64;
            let dt = 0.2 * dx;
            let steps = (4.0 / dt).round() as usize;
            let s0 = gaussian(nn, dx, 12.0, 1.5, 0.0, spinor);
            let traj = dirac_evolve_1p1(&s0, &EvolutionConfig::free(dt, steps, 0.0)).unwrap();
            let exact = gaussian(nn, dx, 12.0 + steps as f64 * dt, 1.5, 0.0, spinor);
            errs.push(traj.last().unwrap().max_diff(&exact));
        }
        assert!(errs[0] < 2e-2, "{errs:?}");
        assert!((errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
    }

    #[test]
    fn rest_state_rotates_at_mass_frequency() {
        let (n, dx, m, dt) = (64, 0.5, 1.3, 0.05);
        let s0 = LatticeState::from_fn(n, dx, 2, |_| vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let traj = dirac_evolve_1p1(&s0, &EvolutionConfig::free(dt, 100, m)).unwrap();
        let t = 100.0 * dt;
        let expected = (-I * m * t).exp();
        let last = traj.last().unwrap();
        for j in 0..n {
            assert!((last.site(j)[0] - expected).norm() < 1e-6);
            assert!(last.site(j)[1].norm() < 1e-6);
        }
    }

    #[test]
    fn norm_is_conserved_with_and_without_potential() {
        let (n, dx) = (128, 0.25);
        let s0 = gaussian(n, dx, 16.0, 2.0, 1.1, [c(0.8, 0.1), c(-0.2, 0.5)]);
        let mut cfg = EvolutionConfig::free(0.05, 1000, 0.7);
        let traj = dirac_evolve_1p1(&s0, &cfg).unwrap();
        assert!((traj.last().unwrap().norm() - 1.0).abs() < 1e-8);
        cfg.e = 1.0;
        cfg.a0 = (0..n).map(|j| 0.3 * (2.0 * PI * j as f64 / n as f64).cos()).collect();
        cfg.a1 = (0..n).map(|j| 0.2 * (2.0 * PI * j as f64 / n as f64).sin()).collect();
        let traj = dirac_evolve_1p1(&s0, &cfg).unwrap();
        assert!((traj.last().unwrap().norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn guards() {
        let s0 = LatticeState::zeros(32, 0.1, 2);
        match dirac_evolve_1p1(&s0, &EvolutionConfig::free(0.1, 1, 0.0)) {
            Err(Error::Stability { product, suggested_dt }) => {
                assert!(product >= 0.5);
                assert!(suggested_dt * 10.0 < 0.5);
            }
            other => panic!("{other:?}"),
        }
        let mut open = s0.clone();
        open.boundary = Boundary::Open;
        assert!(matches!(dirac_evolve_1p1(&open, &EvolutionConfig::free(0.01, 1, 0.0)), Err(Error::NonPeriodic)));
        assert!(matches!(
            SplitStep::new(EngineKind::Kg, 32, 0.1, Boundary::Periodic, EvolutionConfig::free(0.01, 1, 0.0)),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn schrodinger_plane_wave_phase() {
        let (n, dx, m, dt) = (64, 0.3, 1.0, 0.01);
        let k = wavenumber(3, n, dx);
        let s0 = LatticeState::from_fn(n, dx, 1, |x| vec![(I * k * x).exp()]);
        let engine = SplitStep::new(EngineKind::Schrodinger, n, dx, Boundary::Periodic, EvolutionConfig::free(dt, 50, m)).unwrap();
        let mut s = s0.clone();
        engine.run(&mut s, |_, _, _| Ok(())).unwrap();
        let omega = laplacian_symbol(k, dx) / (2.0 * m);
        let phase = (-I * omega * 50.0 * dt).exp();
        for j in 0..n {
            assert!((s.site(j)[0] - s0.site(j)[0] * phase).norm() < 1e-12);
        }
    }
}
