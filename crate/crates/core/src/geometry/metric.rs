//! Metric fields on coordinate charts and the builtin catalog.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::Convention;
use crate::linalg::RMat;

/// A metric field on one chart.
///
/// `g` must be pure and reentrant. `dg`, when supplied, returns the analytic
/// partial derivatives `∂_α g_μν` indexed as `dg[α][(μ, ν)]`.
pub trait ChartMetric: Send + Sync {
    fn dim(&self) -> usize;

    /// Orthonormal frame metric `η = diag(...)`, time-like entries first for
    /// Lorentzian signatures.
    fn frame_metric(&self) -> Vec<f64>;

    fn g(&self, x: &[f64]) -> RMat;

    fn dg(&self, _x: &[f64]) -> Option<Vec<RMat>> {
        None
    }

    fn name(&self) -> String {
        "custom".into()
    }

    /// Whether `g` is independent of coordinate 0.
    fn time_independent(&self) -> bool {
        false
    }

    /// Declared signature as (plus count, minus count).
    fn signature(&self) -> (usize, usize) {
        let eta = self.frame_metric();
        let p = eta.iter().filter(|s| **s > 0.0).count();
        (p, eta.len() - p)
    }
}

impl fmt::Debug for dyn ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChartMetric({}, n = {})", self.name(), self.dim())
    }
}

fn diag(v: &[f64]) -> RMat {
    RMat::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

/// Flat metric in Cartesian coordinates.
#[derive(Debug, Clone)]
pub struct Minkowski {
    pub n: usize,
    pub convention: Convention,
}

impl ChartMetric for Minkowski {
    fn dim(&self) -> usize {
        self.n
    }
    fn frame_metric(&self) -> Vec<f64> {
        self.convention.eta(self.n)
    }
    fn g(&self, _x: &[f64]) -> RMat {
        diag(&self.frame_metric())
    }
    fn dg(&self, _x: &[f64]) -> Option<Vec<RMat>> {
        Some(vec![RMat::zeros(self.n, self.n); self.n])
    }
    fn name(&self) -> String {
        "minkowski".into()
    }
    fn time_independent(&self) -> bool {
        true
    }
}

/// Euclidean plane in polar coordinates `(r, θ)`: `diag(1, r²)`.
#[derive(Debug, Clone, Default)]
pub struct PolarFlat2d;

impl ChartMetric for PolarFlat2d {
    fn dim(&self) -> usize {
        2
    }
    fn frame_metric(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }
    fn g(&self, x: &[f64]) -> RMat {
        diag(&[1.0, x[0] * x[0]])
    }
    fn dg(&self, x: &[f64]) -> Option<Vec<RMat>> {
        Some(vec![diag(&[0.0, 2.0 * x[0]]), RMat::zeros(2, 2)])
    }
    fn name(&self) -> String {
        "polar_flat_2d".into()
    }
}

/// Expanding 1+1 universe `diag(-1, a(t)²)` with `a(t) = 1 + εt + κt²/2`.
///
/// `κ = 0` is the linear catalog default.
#[derive(Debug, Clone)]
pub struct Frw1p1 {
    pub eps: f64,
    pub accel: f64,
}

impl Frw1p1 {
    pub fn linear(eps: f64) -> Self {
        Frw1p1 { eps, accel: 0.0 }
    }

    pub fn scale_factor(&self, t: f64) -> f64 {
        1.0 + self.eps * t + 0.5 * self.accel * t * t
    }

    fn rate(&self, t: f64) -> f64 {
        self.eps + self.accel * t
    }
}

impl ChartMetric for Frw1p1 {
    fn dim(&self) -> usize {
        2
    }
    fn frame_metric(&self) -> Vec<f64> {
        vec![-1.0, 1.0]
    }
    fn g(&self, x: &[f64]) -> RMat {
        let a = self.scale_factor(x[0]);
        diag(&[-1.0, a * a])
    }
    fn dg(&self, x: &[f64]) -> Option<Vec<RMat>> {
        let a = self.scale_factor(x[0]);
        Some(vec![diag(&[0.0, 2.0 * a * self.rate(x[0])]), RMat::zeros(2, 2)])
    }
    fn name(&self) -> String {
        "frw_1p1".into()
    }
}

/// Rindler wedge `diag(-(αx)², 1)` in coordinates `(t, x)`, `x > 0`.
#[derive(Debug, Clone)]
pub struct Rindler1p1 {
    pub alpha: f64,
}

impl ChartMetric for Rindler1p1 {
    fn dim(&self) -> usize {
        2
    }
    fn frame_metric(&self) -> Vec<f64> {
        vec![-1.0, 1.0]
    }
    fn g(&self, x: &[f64]) -> RMat {
        let ax = self.alpha * x[1];
        diag(&[-ax * ax, 1.0])
    }
    fn dg(&self, x: &[f64]) -> Option<Vec<RMat>> {
        Some(vec![RMat::zeros(2, 2), diag(&[-2.0 * self.alpha * self.alpha * x[1], 0.0])])
    }
    fn name(&self) -> String {
        "rindler_1p1".into()
    }
    fn time_independent(&self) -> bool {
        true
    }
}

/// Constant metric given as a table.
#[derive(Debug, Clone)]
pub struct ConstantMetric {
    pub g: RMat,
    pub frame: Vec<f64>,
}

impl ChartMetric for ConstantMetric {
    fn dim(&self) -> usize {
        self.g.nrows()
    }
    fn frame_metric(&self) -> Vec<f64> {
        self.frame.clone()
    }
    fn g(&self, _x: &[f64]) -> RMat {
        self.g.clone()
    }
    fn dg(&self, _x: &[f64]) -> Option<Vec<RMat>> {
        let n = self.dim();
        Some(vec![RMat::zeros(n, n); n])
    }
    fn name(&self) -> String {
        "table".into()
    }
    fn time_independent(&self) -> bool {
        true
    }
}

type MetricFnBox = Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>;

/// Metric from a closure; derivatives fall back to finite differences.
#[derive(Clone)]
pub struct FnMetric {
    n: usize,
    frame: Vec<f64>,
    f: MetricFnBox,
}

impl FnMetric {
    pub fn new(frame: Vec<f64>, f: impl Fn(&[f64]) -> RMat + Send + Sync + 'static) -> Self {
        FnMetric { n: frame.len(), frame, f: Arc::new(f) }
    }
}

impl ChartMetric for FnMetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn frame_metric(&self) -> Vec<f64> {
        self.frame.clone()
    }
    fn g(&self, x: &[f64]) -> RMat {
        (self.f)(x)
    }
}

/// Catalog entry: `{"name": ..., "dim": n, "kind": "builtin|table", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub name: String,
    pub dim: usize,
    pub kind: MetricKind,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Builtin,
    Table,
}

fn param_f64(params: &serde_json::Map<String, serde_json::Value>, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Config(format!("params.{key}: expected a number, got {v}"))),
    }
}

impl MetricConfig {
    pub fn builtin(name: &str, dim: usize) -> Self {
        MetricConfig { name: name.into(), dim, kind: MetricKind::Builtin, params: Default::default() }
    }

    pub fn build(&self) -> Result<Arc<dyn ChartMetric>> {
        let check_dim = |want: usize| {
            if self.dim != want {
                Err(Error::Config(format!("metric '{}' has dim {want}, config says {}", self.name, self.dim)))
            } else {
                Ok(())
            }
        };
        match self.kind {
            MetricKind::Builtin => match self.name.as_str() {
                "minkowski" => {
                    let convention = match self.params.get("convention") {
                        None => Convention::MostlyPlus,
                        Some(v) => v
                            .as_str()
                            .ok_or_else(|| Error::Config("params.convention: expected \"mm\" or \"mp\"".into()))?
                            .parse()?,
                    };
                    if self.dim == 0 {
                        return Err(Error::Config("minkowski: dim must be positive".into()));
                    }
                    Ok(Arc::new(Minkowski { n: self.dim, convention }))
                }
                "polar_flat_2d" => {
                    check_dim(2)?;
                    Ok(Arc::new(PolarFlat2d))
                }
                "frw_1p1" => {
                    check_dim(2)?;
                    Ok(Arc::new(Frw1p1 {
                        eps: param_f64(&self.params, "eps", 0.1)?,
                        accel: param_f64(&self.params, "accel", 0.0)?,
                    }))
                }
                "rindler_1p1" => {
                    check_dim(2)?;
                    Ok(Arc::new(Rindler1p1 { alpha: param_f64(&self.params, "alpha", 1.0)? }))
                }
                other => Err(Error::Config(format!(
                    "unknown builtin metric '{other}' (expected minkowski, polar_flat_2d, frw_1p1, rindler_1p1)"
                ))),
            },
            MetricKind::Table => {
                let rows = self
                    .params
                    .get("g")
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| Error::Config("params.g: expected an n x n array".into()))?;
                let mut g = RMat::zeros(self.dim, self.dim);
                if rows.len() != self.dim {
                    return Err(Error::Config(format!("params.g: expected {} rows", self.dim)));
                }
                for (i, row) in rows.iter().enumerate() {
                    let row = row
                        .as_array()
                        .filter(|r| r.len() == self.dim)
                        .ok_or_else(|| Error::Config(format!("params.g[{i}]: expected {} numbers", self.dim)))?;
                    for (j, v) in row.iter().enumerate() {
                        g[(i, j)] = v.as_f64().ok_or_else(|| Error::Config(format!("params.g[{i}][{j}]: not a number")))?;
                    }
                }
                let frame = match self.params.get("frame") {
                    Some(v) => serde_json::from_value::<Vec<f64>>(v.clone())
                        .map_err(|e| Error::Config(format!("params.frame: {e}")))?,
                    None => {
                        let eig = g.clone().symmetric_eigen();
                        let mut signs: Vec<f64> = eig.eigenvalues.iter().map(|l| l.signum()).collect();
                        signs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        signs
                    }
                };
                if frame.len() != self.dim {
                    return Err(Error::Config("params.frame: length must equal dim".into()));
                }
                Ok(Arc::new(ConstantMetric { g, frame }))
            }
        }
    }
}
