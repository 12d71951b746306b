//! Vierbeins, Levi-Civita connection and the spin connection.

use crate::error::{Error, Result};
use crate::gamma::MatrixRep;
use crate::linalg::{self, CMat, RMat};

use super::metric::ChartMetric;

/// Default finite-difference step in chart units.
pub const DEFAULT_STEP: f64 = 1e-4;
const SYMMETRY_TOL: f64 = 1e-14;

/// Frame field `e^a_μ` stored with the frame index as row.
#[derive(Debug, Clone, PartialEq)]
pub struct Vierbein {
    pub e: RMat,
    pub eta: Vec<f64>,
}

impl Vierbein {
    /// `e^a_μ η_ab e^b_ν`.
    pub fn metric(&self) -> RMat {
        let eta = RMat::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eta));
        self.e.transpose() * eta * &self.e
    }

    /// Inverse frame `e_a^μ` with the coordinate index as row.
    pub fn inverse(&self) -> RMat {
        self.e.clone().try_inverse().expect("vierbein of a nondegenerate metric is invertible")
    }
}

fn check_point(metric: &dyn ChartMetric, x: &[f64]) -> Result<RMat> {
    let n = metric.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!("point has {} coordinates, chart has {n}", x.len())));
    }
    let g = metric.g(x);
    let scale = g.amax().max(1.0);
    let asym = (&g - g.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::MetricAsymmetric { point: x.to_vec(), asym });
    }
    let (p, q) = metric.signature();
    let eig = g.clone().symmetric_eigen();
    let pos = eig.eigenvalues.iter().filter(|l| **l > 0.0).count();
    let neg = eig.eigenvalues.iter().filter(|l| **l < 0.0).count();
    if pos != p || neg != q {
        return Err(Error::MetricSignature { point: x.to_vec(), p, q });
    }
    Ok(g)
}

/// `g = L D Lᵀ` without pivoting; `None` if a pivot vanishes.
fn ldl(g: &RMat) -> Option<(RMat, Vec<f64>)> {
    let n = g.nrows();
    let mut l = RMat::identity(n, n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = g[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if dj.abs() < 1e-14 * g.amax().max(1.0) {
            return None;
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut v = g[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    Some((l, d))
}

/// Frame at `x` with `e^a_μ η_ab e^b_ν = g_μν`.
///
/// The gauge is the triangular one from `g = L D Lᵀ` (so diagonal metrics
/// give `e = diag(√|g_μμ|)`) whenever the pivot signs line up with `η`;
/// otherwise the eigen-decomposition gauge with time-like axes first and each
/// eigenvector's largest component positive.
pub fn vierbein_at(metric: &dyn ChartMetric, x: &[f64]) -> Result<Vierbein> {
    let g = check_point(metric, x)?;
    let eta = metric.frame_metric();
    let n = eta.len();
    if let Some((l, d)) = ldl(&g) {
        if d.iter().zip(&eta).all(|(di, s)| di.signum() == s.signum()) {
            let mut e = l.transpose();
            for a in 0..n {
                let s = d[a].abs().sqrt();
                for mu in 0..n {
                    e[(a, mu)] *= s;
                }
            }
            return Ok(Vierbein { e, eta });
        }
    }
    let eig = g.symmetric_eigen();
    let mut neg: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 0.0).collect();
    let mut pos: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    let by_value = |a: &usize, b: &usize| eig.eigenvalues[*a].abs().partial_cmp(&eig.eigenvalues[*b].abs()).unwrap();
    neg.sort_by(by_value);
    pos.sort_by(by_value);
    let mut e = RMat::zeros(n, n);
    for (a, s) in eta.iter().enumerate() {
        let idx = if *s < 0.0 { neg.remove(0) } else { pos.remove(0) };
        let v = eig.eigenvectors.column(idx);
        let big = v.iter().cloned().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
        let sign = big.signum();
        let root = eig.eigenvalues[idx].abs().sqrt();
        for mu in 0..n {
            e[(a, mu)] = sign * root * v[mu];
        }
    }
    Ok(Vierbein { e, eta })
}

/// `Γ^α_μν`, stored flat as `[α][μ][ν]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel { n, data: vec![0.0; n * n * n] }
    }

    #[inline]
    pub fn get(&self, alpha: usize, mu: usize, nu: usize) -> f64 {
        self.data[(alpha * self.n + mu) * self.n + nu]
    }

    fn set(&mut self, alpha: usize, mu: usize, nu: usize, v: f64) {
        let n = self.n;
        self.data[(alpha * n + mu) * n + nu] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_step(x: &[f64], h: f64) -> Result<()> {
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::DegenerateStep { eps: h, reason: "step must be positive and finite".into() });
    }
    if h < 1e-7 * scale {
        return Err(Error::StepTooSmall { h });
    }
    Ok(())
}

/// Fourth-order central difference of a matrix-valued function along axis `a`.
pub(crate) fn central_diff4<F>(f: F, x: &[f64], a: usize, h: f64) -> RMat
where
    F: Fn(&[f64]) -> RMat,
{
    let at = |s: f64| {
        let mut y = x.to_vec();
        y[a] += s * h;
        f(&y)
    };
    (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) / (12.0 * h)
}

/// `∂_α g_μν` from the analytic callback or fourth-order differences.
pub fn metric_derivatives(metric: &dyn ChartMetric, x: &[f64], h: f64) -> Result<Vec<RMat>> {
    if let Some(dg) = metric.dg(x) {
        return Ok(dg);
    }
    check_step(x, h)?;
    Ok((0..metric.dim()).map(|a| central_diff4(|y| metric.g(y), x, a, h)).collect())
}

fn christoffel_from(g: &RMat, dg: &[RMat]) -> Result<Christoffel> {
    let n = g.nrows();
    let cond = {
        let sv = g.clone().svd(false, false).singular_values;
        sv.max() / sv.min()
    };
    let g_inv = g.clone().try_inverse().filter(|_| cond < linalg::CONDITION_LIMIT).ok_or(Error::Singular { cond })?;
    let mut out = Christoffel::zeros(n);
    for alpha in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let mut s = 0.0;
                for beta in 0..n {
                    s += g_inv[(alpha, beta)] * (dg[mu][(beta, nu)] + dg[nu][(beta, mu)] - dg[beta][(mu, nu)]);
                }
                out.set(alpha, mu, nu, 0.5 * s);
                out.set(alpha, nu, mu, 0.5 * s);
            }
        }
    }
    Ok(out)
}

/// Levi-Civita symbols at `x`; `h` is used only when no analytic `dg` exists.
pub fn christoffel_at(metric: &dyn ChartMetric, x: &[f64], h: f64) -> Result<Christoffel> {
    let g = check_point(metric, x)?;
    let dg = metric_derivatives(metric, x, h)?;
    christoffel_from(&g, &dg)
}

/// Largest `|∇_α g_μν|` using the same derivatives as [`christoffel_at`].
pub fn metric_compatibility_residual(metric: &dyn ChartMetric, x: &[f64], h: f64) -> Result<f64> {
    let g = check_point(metric, x)?;
    let dg = metric_derivatives(metric, x, h)?;
    let gam = christoffel_from(&g, &dg)?;
    let n = g.nrows();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for mu in 0..n {
            for nu in 0..n {
                let mut v = dg[a][(mu, nu)];
                for b in 0..n {
                    v -= gam.get(b, a, mu) * g[(b, nu)] + gam.get(b, a, nu) * g[(mu, b)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Levi-Civita data plus the frame spin connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionData {
    pub n: usize,
    pub christoffel: Christoffel,
    /// `ω_abμ`, flat as `[a][b][μ]`, antisymmetric in (a,b) by construction.
    pub omega: Vec<f64>,
    pub eta: Vec<f64>,
}

impl ConnectionData {
    #[inline]
    pub fn omega(&self, a: usize, b: usize, mu: usize) -> f64 {
        self.omega[(a * self.n + b) * self.n + mu]
    }

    /// `ω^a_bμ = η^aa ω_abμ`.
    pub fn omega_mixed(&self, a: usize, b: usize, mu: usize) -> f64 {
        self.omega(a, b, mu) / self.eta[a]
    }

    pub fn max_abs_omega(&self) -> f64 {
        self.omega.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Spin connection with its spinor-matrix form `Ω_μ`.
#[derive(Debug, Clone)]
pub struct SpinConnection {
    pub data: ConnectionData,
    pub vierbein: Vierbein,
    /// `Ω_μ = (1/8) ω_abμ [γ^a, γ^b]`.
    pub omega_matrices: Vec<CMat>,
    /// Max difference between the commutator form and `(1/4) ω^ab_μ γ_a γ_b`.
    pub form_agreement: f64,
}

/// Frame representation matching the chart's `η`.
pub fn frame_rep(metric: &dyn ChartMetric) -> Result<MatrixRep> {
    MatrixRep::for_frame_metric(&metric.frame_metric())
}

/// `ω_abμ = η_ac η_bd e^c_ν (∂_μ e^{dν} + Γ^ν_μσ e^{dσ})`, antisymmetrized.
pub fn spin_connection_data(metric: &dyn ChartMetric, x: &[f64], h: f64) -> Result<(ConnectionData, Vierbein)> {
    check_step(x, h)?;
    let n = metric.dim();
    let vb = vierbein_at(metric, x)?;
    let gam = christoffel_at(metric, x, h)?;
    let eta = vb.eta.clone();
    // e^{bν}: inverse frame with the frame index raised.
    let raised_inverse = |y: &[f64]| -> Result<RMat> {
        let inv = vierbein_at(metric, y)?.inverse();
        Ok(RMat::from_fn(n, n, |nu, b| inv[(nu, b)] / eta[b]))
    };
    let inv_up = raised_inverse(x)?;
    let mut d_inv = Vec::with_capacity(n);
    for mu in 0..n {
        let mut samples = Vec::with_capacity(4);
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let mut y = x.to_vec();
            y[mu] += s * h;
            samples.push(raised_inverse(&y)?);
        }
        d_inv.push((&samples[0] - &samples[3] + (&samples[2] - &samples[1]) * 8.0) / (12.0 * h));
    }
    let mut raw = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for mu in 0..n {
                let mut s = 0.0;
                for nu in 0..n {
                    let mut cov = d_inv[mu][(nu, b)];
                    for sigma in 0..n {
                        cov += gam.get(nu, mu, sigma) * inv_up[(sigma, b)];
                    }
                    s += vb.e[(a, nu)] * cov;
                }
                raw[(a * n + b) * n + mu] = s * eta[a] * eta[b];
            }
        }
    }
    let mut omega = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for mu in 0..n {
                omega[(a * n + b) * n + mu] = 0.5 * (raw[(a * n + b) * n + mu] - raw[(b * n + a) * n + mu]);
            }
        }
    }
    Ok((ConnectionData { n, christoffel: gam, omega, eta }, vb))
}

/// Spin connection at `x` with default step.
pub fn spin_connection_at(metric: &dyn ChartMetric, x: &[f64]) -> Result<SpinConnection> {
    spin_connection_with_step(metric, x, DEFAULT_STEP)
}

pub fn spin_connection_with_step(metric: &dyn ChartMetric, x: &[f64], h: f64) -> Result<SpinConnection> {
    let (data, vierbein) = spin_connection_data(metric, x, h)?;
    let rep = frame_rep(metric)?;
    let up = rep.raised();
    let n = data.n;
    let d = rep.spinor_dim();
    let mut omega_matrices = Vec::with_capacity(n);
    let mut form_agreement: f64 = 0.0;
    for mu in 0..n {
        let mut comm_form = CMat::zeros(d, d);
        let mut product_form = CMat::zeros(d, d);
        for a in 0..n {
            for b in 0..n {
                let w = data.omega(a, b, mu);
                if w == 0.0 {
                    continue;
                }
                comm_form += linalg::commutator(&up[a], &up[b]).scale(w / 8.0);
                // ω^ab_μ γ_a γ_b
                let w_up = w / (data.eta[a] * data.eta[b]);
                product_form += (&rep.gammas[a] * &rep.gammas[b]).scale(w_up / 4.0);
            }
        }
        form_agreement = form_agreement.max(linalg::max_diff(&comm_form, &product_form));
        omega_matrices.push(comm_form);
    }
    Ok(SpinConnection { data, vierbein, omega_matrices, form_agreement })
}

/// Frame curvature `R^a_bμν = ∂_μ ω_ν^a_b - ∂_ν ω_μ^a_b + [ω_μ, ω_ν]^a_b`,
/// flat as `[a][b][μ][ν]`, from central differences of ω with one Richardson step.
pub fn spin_curvature_at(metric: &dyn ChartMetric, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = metric.dim();
    let inner = (h * 1e-1).min(DEFAULT_STEP);
    let omega_mats = |y: &[f64]| -> Result<Vec<RMat>> {
        let (data, _) = spin_connection_data(metric, y, inner)?;
        Ok((0..n).map(|mu| RMat::from_fn(n, n, |a, b| data.omega_mixed(a, b, mu))).collect())
    };
    let deriv = |step: f64| -> Result<Vec<Vec<RMat>>> {
        // d[μ][ν] = ∂_μ ω_ν
        let mut out = vec![Vec::new(); n];
        for mu in 0..n {
            let mut yp = x.to_vec();
            let mut ym = x.to_vec();
            yp[mu] += step;
            ym[mu] -= step;
            let (p, m) = (omega_mats(&yp)?, omega_mats(&ym)?);
            out[mu] = (0..n).map(|nu| (&p[nu] - &m[nu]) / (2.0 * step)).collect();
        }
        Ok(out)
    };
    let coarse = deriv(h)?;
    let fine = deriv(h / 2.0)?;
    let here = omega_mats(x)?;
    let mut r = vec![0.0; n * n * n * n];
    for mu in 0..n {
        for nu in 0..n {
            let d_mu_nu = &fine[mu][nu] + (&fine[mu][nu] - &coarse[mu][nu]) / 3.0;
            let d_nu_mu = &fine[nu][mu] + (&fine[nu][mu] - &coarse[nu][mu]) / 3.0;
            let curv = d_mu_nu - d_nu_mu + &here[mu] * &here[nu] - &here[nu] * &here[mu];
            for a in 0..n {
                for b in 0..n {
                    r[((a * n + b) * n + mu) * n + nu] = curv[(a, b)];
                }
            }
        }
    }
    Ok(r)
}
