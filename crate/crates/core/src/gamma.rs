//! Gamma-matrix representations, dual bases and spinor transformations.
//!
//! The concrete representation is the Dirac basis. For the mostly-minus
//! metric `diag(+1,-1,-1,-1)` the generators are
//!
//! ```text
//! γ_0 = diag(1, 1, -1, -1),   γ_k = [[0, σ_k], [-σ_k, 0]]
//! ```
//!
//! and the mostly-plus generators are `i` times these. In two dimensions the
//! same pattern uses `γ_0 = σ_z`, `γ_1 = iσ_y`.

use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::Signature;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RMat, I};

/// Residual bound for the Clifford relations of every produced representation.
pub const RELATION_TOL: f64 = 1e-12;

/// Lorentzian sign convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    /// `diag(+1, -1, ..., -1)`
    #[serde(rename = "mm")]
    MostlyMinus,
    /// `diag(-1, +1, ..., +1)`
    #[serde(rename = "mp")]
    MostlyPlus,
}

impl Convention {
    pub fn eta(&self, n: usize) -> Vec<f64> {
        let (time, space) = match self {
            Convention::MostlyMinus => (1.0, -1.0),
            Convention::MostlyPlus => (-1.0, 1.0),
        };
        (0..n).map(|i| if i == 0 { time } else { space }).collect()
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" | "mostly-minus" => Ok(Convention::MostlyMinus),
            "mp" | "mostly-plus" => Ok(Convention::MostlyPlus),
            other => Err(Error::Config(format!("unknown convention '{other}' (expected mm or mp)"))),
        }
    }
}

/// Generators `γ_μ` with `{γ_μ, γ_ν} = 2 g_μν 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    pub metric: RMat,
    pub gammas: Vec<CMat>,
}

fn pauli() -> [CMat; 3] {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    [
        CMat::from_row_slice(2, 2, &[o, one, one, o]),
        CMat::from_row_slice(2, 2, &[o, -I, I, o]),
        CMat::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

/// Hermitian generators squaring to +1, used as the Euclidean seed.
fn euclidean_seed(n: usize) -> Result<Vec<CMat>> {
    let [sx, sy, sz] = pauli();
    match n {
        2 => Ok(vec![sz, sy]),
        4 => {
            let g0 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
                c(-1.0, 0.0),
            ]));
            let mut out = vec![g0];
            for s in [sx, sy, sz] {
                let mut g = CMat::zeros(4, 4);
                g.view_mut((0, 2), (2, 2)).copy_from(&s);
                g.view_mut((2, 0), (2, 2)).copy_from(&(-&s));
                // Dirac γ^k squares to -1; -i γ^k squares to +1.
                out.push(g * -I);
            }
            Ok(out)
        }
        other => Err(Error::DimensionMismatch(format!("gamma representations exist for n = 2 or 4, not {other}"))),
    }
}

impl MatrixRep {
    /// Representation for an orthonormal frame metric `diag(eta)`.
    pub fn for_frame_metric(eta: &[f64]) -> Result<Self> {
        let seed = euclidean_seed(eta.len())?;
        let gammas = seed
            .into_iter()
            .zip(eta)
            .map(|(g, &s)| if s > 0.0 { g } else { g * I })
            .collect();
        let metric = RMat::from_diagonal(&nalgebra::DVector::from_column_slice(eta));
        let rep = MatrixRep { metric, gammas };
        rep.assert_relations();
        Ok(rep)
    }

    /// Two-dimensional Lorentzian representation.
    pub fn lorentzian_2d(convention: Convention) -> Self {
        Self::for_frame_metric(&convention.eta(2)).expect("2D representation")
    }

    pub fn n(&self) -> usize {
        self.gammas.len()
    }

    pub fn spinor_dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    /// Largest Frobenius residual of `{γ_μ, γ_ν} - 2 g_μν 1`.
    pub fn relation_residual(&self) -> f64 {
        let d = self.spinor_dim();
        let one = linalg::eye(d);
        let mut worst: f64 = 0.0;
        for (mu, a) in self.gammas.iter().enumerate() {
            for (nu, b) in self.gammas.iter().enumerate() {
                let r = linalg::anticommutator(a, b) - one.scale(2.0 * self.metric[(mu, nu)]);
                worst = worst.max(linalg::frobenius(&r));
            }
        }
        worst
    }

    fn assert_relations(&self) {
        debug_assert!(self.relation_residual() < RELATION_TOL, "Clifford relations violated");
    }

    /// Signature (p plus, q minus) of a diagonal metric.
    pub fn signature(&self) -> Result<Signature> {
        let p = (0..self.n()).filter(|&i| self.metric[(i, i)] > 0.0).count();
        Signature::new(p, self.n() - p)
    }

    /// Generators reordered to positive squares first, matching the generator
    /// order of [`crate::clifford::make_algebra`].
    pub fn generators_in_algebra_order(&self) -> Vec<CMat> {
        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..self.n()).partition(|&i| self.metric[(i, i)] > 0.0);
        pos.into_iter().chain(neg).map(|i| self.gammas[i].clone()).collect()
    }

    /// Frame gammas with the index raised by the diagonal frame metric.
    pub fn raised(&self) -> Vec<CMat> {
        self.gammas
            .iter()
            .enumerate()
            .map(|(a, g)| g.scale(1.0 / self.metric[(a, a)]))
            .collect()
    }
}

/// Standard Dirac representation for the chosen convention.
pub fn dirac_gammas(convention: Convention) -> MatrixRep {
    MatrixRep::for_frame_metric(&convention.eta(4)).expect("4D representation")
}

/// `γ^μ = g^μν γ_ν` for an arbitrary symmetric invertible `g`.
pub fn dual_gammas(rep: &MatrixRep, g: &RMat) -> Result<MatrixRep> {
    let n = rep.n();
    if g.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("metric is {:?}, representation has n = {n}", g.shape())));
    }
    let g_inv = g.clone().try_inverse().ok_or(Error::Singular { cond: f64::INFINITY })?;
    let d = rep.spinor_dim();
    let gammas = (0..n)
        .map(|mu| {
            let mut acc = CMat::zeros(d, d);
            for nu in 0..n {
                acc += rep.gammas[nu].scale(g_inv[(mu, nu)]);
            }
            acc
        })
        .collect();
    // {γ^μ, γ^ν} = 2 (g⁻¹ g_rep g⁻¹)^{μν}
    let metric = &g_inv * &rep.metric * &g_inv;
    Ok(MatrixRep { metric, gammas })
}

/// `ρ(A) = diag(A, (A†)⁻¹)` for `A` in SL(2,C).
pub fn sl2c_embed(a: &CMat) -> Result<CMat> {
    if a.shape() != (2, 2) {
        return Err(Error::DimensionMismatch(format!("expected 2x2, got {:?}", a.shape())));
    }
    let det = a.determinant();
    if (det - c(1.0, 0.0)).norm() >= 1e-10 {
        return Err(Error::NonUnitDeterminant { det: det.norm() });
    }
    let inv_dag = a.adjoint().try_inverse().ok_or(Error::Singular { cond: f64::INFINITY })?;
    let mut out = CMat::zeros(4, 4);
    out.view_mut((0, 0), (2, 2)).copy_from(a);
    out.view_mut((2, 2), (2, 2)).copy_from(&inv_dag);
    Ok(out)
}

/// Generator `(1/4)[γ_a, γ_b]` of spinor transformations in the (a,b) plane.
pub fn spin_generator(rep: &MatrixRep, a: usize, b: usize) -> CMat {
    linalg::commutator(&rep.gammas[a], &rep.gammas[b]).scale(0.25)
}

/// `exp(param · (1/4)[γ_a, γ_b])` for any distinct pair; boosts use a time index.
pub fn spin_transform(rep: &MatrixRep, a: usize, b: usize, param: f64) -> Result<CMat> {
    let n = rep.n();
    if a == b || a >= n || b >= n {
        return Err(Error::DegeneratePlane(a, b));
    }
    Ok(linalg::expm(&spin_generator(rep, a, b).scale(param)))
}

/// Spinor rotation by `angle` in the spatial plane (j,k).
pub fn spin_rotate(rep: &MatrixRep, j: usize, k: usize, angle: f64) -> Result<CMat> {
    if j == 0 || k == 0 {
        return Err(Error::DegeneratePlane(j, k));
    }
    spin_transform(rep, j, k, angle)
}

/// Row-major `[re, im]` pairs per entry.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixRepJson {
    pub n: usize,
    pub spinor_dim: usize,
    pub metric: Vec<Vec<f64>>,
    pub gammas: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<&MatrixRep> for MatrixRepJson {
    fn from(rep: &MatrixRep) -> Self {
        let rows = |m: &CMat| -> Vec<Vec<[f64; 2]>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
        };
        MatrixRepJson {
            n: rep.n(),
            spinor_dim: rep.spinor_dim(),
            metric: (0..rep.n()).map(|i| (0..rep.n()).map(|j| rep.metric[(i, j)]).collect()).collect(),
            gammas: rep.gammas.iter().map(rows).collect(),
        }
    }
}

impl TryFrom<MatrixRepJson> for MatrixRep {
    type Error = Error;
    fn try_from(j: MatrixRepJson) -> Result<Self> {
        let metric = RMat::from_fn(j.n, j.n, |a, b| j.metric[a][b]);
        let gammas = j
            .gammas
            .iter()
            .map(|g| DMatrix::<Complex64>::from_fn(j.spinor_dim, j.spinor_dim, |a, b| c(g[a][b][0], g[a][b][1])))
            .collect::<Vec<_>>();
        if gammas.len() != j.n {
            return Err(Error::DimensionMismatch("gamma count does not match n".into()));
        }
        Ok(MatrixRep { metric, gammas })
    }
}
