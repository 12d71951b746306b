//! Clifford-valued operators: geometric momentum, spin-vectors and the
//! stress-energy contraction.

use crate::error::{Error, Result};
use crate::gamma::MatrixRep;
use crate::geometry::{spin_connection_at, vierbein_at, ChartMetric};
use crate::linalg::{self, c, CMat, RMat, I};

use super::engine::{Boundary, LatticeState};

/// Spatial lattice on a constant-time slice of a 1+1 chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceGeometry {
    pub n: usize,
    pub dx: f64,
    pub origin: f64,
    pub time: f64,
    pub boundary: Boundary,
}

impl SliceGeometry {
    pub fn periodic(n: usize, dx: f64) -> Self {
        SliceGeometry { n, dx, origin: 0.0, time: 0.0, boundary: Boundary::Periodic }
    }

    pub fn of(state: &LatticeState) -> Self {
        SliceGeometry { n: state.n, dx: state.dx, origin: 0.0, time: 0.0, boundary: state.boundary }
    }
}

fn check_rep_matches(rep: &MatrixRep, metric: &dyn ChartMetric) -> Result<()> {
    let eta = metric.frame_metric();
    let same = eta.len() == rep.n() && eta.iter().enumerate().all(|(a, s)| rep.metric[(a, a)] == *s);
    if !same {
        let (p, q) = metric.signature();
        let sig = rep.signature()?;
        return Err(Error::SignatureMismatch(sig.p, sig.q, p, q));
    }
    Ok(())
}

/// `γ^0`, the weight of the Dirac inner product `Σ φ† γ^0 ψ Δx`.
pub fn dirac_beta(rep: &MatrixRep) -> CMat {
    rep.raised()[0].clone()
}

/// Spatial geometric momentum `𝔭 = -i γ^1(x) (∂_1 + Ω_1(x))` as a dense
/// `(N·d)×(N·d)` matrix with periodic central differences.
pub fn momentum_operator(slice: &SliceGeometry, rep: &MatrixRep, metric: &dyn ChartMetric) -> Result<CMat> {
    if slice.boundary != Boundary::Periodic {
        return Err(Error::NonPeriodic);
    }
    if metric.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("momentum operator is defined on 1+1 charts, got n = {}", metric.dim())));
    }
    check_rep_matches(rep, metric)?;
    let (n, d) = (slice.n, rep.spinor_dim());
    let up = rep.raised();
    let mut p = CMat::zeros(n * d, n * d);
    for j in 0..n {
        let x = [slice.time, slice.origin + j as f64 * slice.dx];
        let inv = vierbein_at(metric, &x)?.inverse();
        let gamma1 = (0..2).fold(CMat::zeros(d, d), |acc, a| acc + up[a].scale(inv[(1, a)]));
        let omega1 = &spin_connection_at(metric, &x)?.omega_matrices[1];
        let g = gamma1.map(|z| z * -I);
        let half = 1.0 / (2.0 * slice.dx);
        let local = &g * omega1;
        for r in 0..d {
            for col in 0..d {
                let (right, left) = ((j + 1) % n, (j + n - 1) % n);
                p[(j * d + r, right * d + col)] += g[(r, col)] * half;
                p[(j * d + r, left * d + col)] -= g[(r, col)] * half;
                p[(j * d + r, j * d + col)] += local[(r, col)];
            }
        }
    }
    Ok(p)
}

/// `‖B𝔭 - 𝔭†B‖_max` with `B = 1_N ⊗ γ^0`.
pub fn dirac_hermiticity_residual(p: &CMat, rep: &MatrixRep) -> f64 {
    let n = p.nrows() / rep.spinor_dim();
    let b = linalg::kron(&linalg::eye(n), &dirac_beta(rep));
    linalg::max_diff(&(&b * p), &(p.adjoint() * &b))
}

/// Clifford component `P_jk = Tr(γ_1 𝔭_jk)/d`, an `N×N` matrix; flat charts give `-i∂`.
pub fn momentum_component(p: &CMat, rep: &MatrixRep) -> CMat {
    let d = rep.spinor_dim();
    let n = p.nrows() / d;
    let g1 = &rep.gammas[1];
    CMat::from_fn(n, n, |j, k| {
        let block = p.view((j * d, k * d), (d, d));
        (g1 * block).trace() / c(d as f64, 0.0)
    })
}

/// `⟨𝔭⟩ = Σ_jk ψ_j† P_jk ψ_k Δx`, applied componentwise.
pub fn momentum_expectation(state: &LatticeState, component: &CMat) -> num_complex::Complex64 {
    let (n, d) = (state.n, state.components);
    let mut acc = c(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            let w = component[(j, k)];
            if w == c(0.0, 0.0) {
                continue;
            }
            for a in 0..d {
                acc += state.data[j * d + a].conj() * w * state.data[k * d + a];
            }
        }
    }
    acc * state.dx
}

/// Sparse periodic form of `-i∂` for momentum expectations on large lattices.
pub fn flat_momentum_expectation(state: &LatticeState) -> num_complex::Complex64 {
    let (n, d) = (state.n, state.components);
    let mut acc = c(0.0, 0.0);
    for j in 0..n {
        for a in 0..d {
            let deriv = (state.data[((j + 1) % n) * d + a] - state.data[((j + n - 1) % n) * d + a]) / (2.0 * state.dx);
            acc += state.data[j * d + a].conj() * (-I) * deriv;
        }
    }
    acc * state.dx
}

/// `(𝔈, 𝔓_j) = (H ⊗ γ^0, P_j ⊗ γ^j)` and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinVector {
    pub components: Vec<CMat>,
    pub aggregate: CMat,
}

pub fn spin_vector_assemble(h: &CMat, p: &[CMat], rep: &MatrixRep) -> Result<SpinVector> {
    if p.len() + 1 != rep.n() {
        return Err(Error::DimensionMismatch(format!("{} spatial momenta for an n = {} representation", p.len(), rep.n())));
    }
    if h.nrows() != h.ncols() || p.iter().any(|pj| pj.shape() != h.shape()) {
        return Err(Error::DimensionMismatch("H and every P_j must be square of equal size".into()));
    }
    let up = rep.raised();
    let components: Vec<CMat> = std::iter::once(h).chain(p).zip(&up).map(|(m, g)| linalg::kron(m, g)).collect();
    let size = components[0].nrows();
    let aggregate = components.iter().fold(CMat::zeros(size, size), |acc, m| acc + m);
    Ok(SpinVector { components, aggregate })
}

/// `𝔗 = Σ T^μν γ_μ γ_ν`.
pub fn stress_energy_contract(t: &RMat, rep: &MatrixRep) -> Result<CMat> {
    stress_energy_contract_with(t, &rep.gammas)
}

/// Bundle form `G_μ 𝒯^μν G_ν` with any generator list.
pub fn stress_energy_contract_with(t: &RMat, gammas: &[CMat]) -> Result<CMat> {
    let n = gammas.len();
    if t.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("T is {:?}, representation has n = {n}", t.shape())));
    }
    let d = gammas[0].nrows();
    let mut out = CMat::zeros(d, d);
    for mu in 0..n {
        for nu in 0..n {
            if t[(mu, nu)] != 0.0 {
                out += (&gammas[mu] * &gammas[nu]).scale(t[(mu, nu)]);
            }
        }
    }
    Ok(out)
}

/// Row vector of `(1/d) Tr(S⁻¹ γ_μ S γ^ν)`: the vector matrix induced by a spinor map.
pub fn induced_vector_matrix(s: &CMat, rep: &MatrixRep) -> Result<RMat> {
    let s_inv = linalg::guarded_inverse(s)?;
    let up = rep.raised();
    let d = rep.spinor_dim() as f64;
    let n = rep.n();
    Ok(RMat::from_fn(n, n, |mu, nu| ((&s_inv * &rep.gammas[mu] * s) * &up[nu]).trace().re / d))
}
