//! JSON-configured evolution experiments with CSV and trajectory outputs.
//!
//! The physical state evolves on the reference Hilbert space. The stored
//! section is its lift `Ψ_j = l⁻¹_{(t, x_j)} ψ_j` through the configured
//! trivialization, carried from step to step by the transport
//! `l⁻¹(t+dt) 𝒰 l(t)`. Observables are evaluated from the section by
//! pushing it back through `l`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundle::trivialization::deserialize_trivialization;
use crate::bundle::{Trivialization, TrivializationConfig};
use crate::error::{Error, Result};
use crate::evolution::engine::{dirac_alpha_beta, wavenumber, Boundary, EngineKind, EvolutionConfig, LatticeState, SplitStep};
use crate::evolution::kg::{kg_first_order, kg_from_first_order, kg_gaussian, Leapfrog};
use crate::evolution::observables::{momentum_component, momentum_operator, SliceGeometry};
use crate::gamma::{Convention, MatrixRep};
use crate::geometry::lattice::{Field, Grid};
use crate::geometry::{ChartMetric, MetricConfig};
use crate::linalg::{self, c, CMat, CVec, I};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n: usize,
    pub dx: f64,
    #[serde(default)]
    pub origin: f64,
}

fn default_width() -> f64 {
    1.0
}

fn default_spinor() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 0.0]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    /// `exp(-(x-x0)²/2w²) e^{ikx}` times a constant spinor.
    Gaussian {
        x0: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        k: f64,
        #[serde(default = "default_spinor")]
        spinor: [[f64; 2]; 2],
    },
    /// Lattice Fourier mode `mode` times a constant spinor.
    Planewave {
        mode: i64,
        #[serde(default = "default_spinor")]
        spinor: [[f64; 2]; 2],
    },
    /// Uniform state.
    Rest {
        #[serde(default = "default_spinor")]
        spinor: [[f64; 2]; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Norm,
    ExpectationP,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub engine: EngineKind,
    pub lattice: LatticeConfig,
    pub cfg: EvolutionConfig,
    pub initial: InitialConfig,
    #[serde(default, deserialize_with = "deserialize_trivialization")]
    pub trivialization: TrivializationConfig,
    /// Chart used for the momentum operator; flat mostly-minus 1+1 by default.
    #[serde(default)]
    pub metric: Option<MetricConfig>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    /// Run an independent solver alongside and report the gap per step.
    #[serde(default)]
    pub crosscheck: bool,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Norm, OutputKind::ExpectationP]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn wants(&self, o: OutputKind) -> bool {
        self.outputs.contains(&o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub norm: f64,
    pub re_p: f64,
    pub im_p: f64,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
    /// Physical state at the final time.
    pub final_state: LatticeState,
    /// Final section in the configured trivialization.
    pub final_section: LatticeState,
    pub files: Vec<PathBuf>,
}

impl ExperimentResult {
    pub fn max_residual(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.residual).reduce(f64::max)
    }

    pub fn norm_drift(&self) -> f64 {
        let n0 = self.rows[0].norm;
        self.rows.iter().fold(0.0, |m, r| m.max((r.norm - n0).abs()))
    }
}

fn spinor_of(s: &[[f64; 2]; 2], components: usize) -> Vec<Complex64> {
    s.iter().take(components).map(|p| c(p[0], p[1])).collect()
}

/// Builds the physical initial state for the engine.
pub fn initial_state(cfg: &ExperimentConfig) -> Result<LatticeState> {
    let (n, dx) = (cfg.lattice.n, cfg.lattice.dx);
    let origin = cfg.lattice.origin;
    let m = cfg.cfg.m;
    let d = cfg.engine.components();
    if cfg.engine == EngineKind::Kg {
        let (phi, dot) = match &cfg.initial {
            InitialConfig::Gaussian { x0, width, k, .. } => {
                let (p, d) = kg_gaussian(n, dx, x0 - origin, *width, *k, m);
                (p, d)
            }
            InitialConfig::Planewave { mode, .. } => {
                let k = 2.0 * PI * *mode as f64 / (n as f64 * dx);
                let omega = (m * m + crate::evolution::engine::laplacian_symbol(k, dx)).sqrt();
                let phi: Vec<Complex64> = (0..n).map(|j| (I * k * (origin + j as f64 * dx)).exp()).collect();
                let dot = phi.iter().map(|p| p * (-I * omega)).collect();
                (phi, dot)
            }
            InitialConfig::Rest { .. } => (vec![c(1.0, 0.0); n], vec![-I * m; n]),
        };
        return kg_first_order(&phi, &dot, m, cfg.cfg.hbar, dx);
    }
    let state = match &cfg.initial {
        InitialConfig::Gaussian { x0, width, k, spinor } => {
            let u = spinor_of(spinor, d);
            LatticeState::from_fn(n, dx, d, |x| {
                let x = x + origin;
                let env = (I * k * x).exp() * (-(x - x0).powi(2) / (2.0 * width * width)).exp();
                u.iter().map(|z| z * env).collect()
            })
        }
        InitialConfig::Planewave { mode, spinor } => {
            let u = spinor_of(spinor, d);
            let k = 2.0 * PI * *mode as f64 / (n as f64 * dx);
            LatticeState::from_fn(n, dx, d, |x| u.iter().map(|z| z * (I * k * (x + origin)).exp()).collect())
        }
        InitialConfig::Rest { spinor } => {
            let u = spinor_of(spinor, d);
            LatticeState::from_fn(n, dx, d, |_| u.clone())
        }
    };
    if state.norm() == 0.0 {
        return Err(Error::Config("initial state is identically zero".into()));
    }
    Ok(state)
}

/// Site-wise fibre maps of a trivialization on one time slice.
struct SliceMaps {
    l: Vec<CMat>,
    l_inv: Vec<CMat>,
}

impl SliceMaps {
    fn at(triv: &dyn Trivialization, t: f64, origin: f64, dx: f64, n: usize) -> Result<Self> {
        let mut l = Vec::with_capacity(n);
        let mut l_inv = Vec::with_capacity(n);
        for j in 0..n {
            let x = [t, origin + j as f64 * dx];
            l.push(triv.l(&x));
            l_inv.push(triv.l_inv(&x)?);
        }
        Ok(SliceMaps { l, l_inv })
    }

    fn apply(mats: &[CMat], state: &LatticeState) -> LatticeState {
        let d = state.components;
        let mut out = state.clone();
        for (j, m) in mats.iter().enumerate() {
            let v = m * CVec::from_column_slice(state.site(j));
            out.data[j * d..(j + 1) * d].copy_from_slice(v.as_slice());
        }
        out
    }
}

/// Sparse rows of the momentum component matrix.
struct SparseRows(Vec<Vec<(usize, Complex64)>>);

impl SparseRows {
    fn from_dense(m: &CMat) -> Self {
        SparseRows(
            (0..m.nrows())
                .map(|j| (0..m.ncols()).filter(|&k| m[(j, k)] != c(0.0, 0.0)).map(|k| (k, m[(j, k)])).collect())
                .collect(),
        )
    }

    fn expectation(&self, s: &LatticeState) -> Complex64 {
        let d = s.components;
        let mut acc = c(0.0, 0.0);
        for (j, row) in self.0.iter().enumerate() {
            for &(k, w) in row {
                for a in 0..d {
                    acc += s.data[j * d + a].conj() * w * s.data[k * d + a];
                }
            }
        }
        acc * s.dx
    }
}

fn momentum_rows(metric: &dyn ChartMetric, lattice: &LatticeConfig, t: f64) -> Result<SparseRows> {
    let rep = MatrixRep::for_frame_metric(&metric.frame_metric())?;
    let slice = SliceGeometry { n: lattice.n, dx: lattice.dx, origin: lattice.origin, time: t, boundary: Boundary::Periodic };
    let p = momentum_operator(&slice, &rep, metric)?;
    Ok(SparseRows::from_dense(&momentum_component(&p, &rep)))
}

/// Dense one-step propagator of the same discretized `H`, for cross-checks.
fn dense_step(cfg: &ExperimentConfig) -> Result<CMat> {
    let (n, dx) = (cfg.lattice.n, cfg.lattice.dx);
    let e = &cfg.cfg;
    let d = cfg.engine.components();
    let mut h = CMat::zeros(n * d, n * d);
    let a0 = |j: usize| e.a0.get(j).copied().unwrap_or(0.0);
    let a1 = |j: usize| e.a1.get(j).copied().unwrap_or(0.0);
    match cfg.engine {
        EngineKind::Dirac1p1 => {
            let (alpha, beta) = dirac_alpha_beta();
            for j in 0..n {
                let (r, l) = ((j + 1) % n, (j + n - 1) % n);
                for a in 0..2 {
                    for b in 0..2 {
                        let hop = alpha[(a, b)] * -I * e.hbar / (2.0 * dx);
                        h[(j * 2 + a, r * 2 + b)] += hop;
                        h[(j * 2 + a, l * 2 + b)] -= hop;
                        h[(j * 2 + a, j * 2 + b)] += beta[(a, b)] * e.m - alpha[(a, b)] * e.e * a1(j);
                    }
                    h[(j * 2 + a, j * 2 + a)] += c(e.e * a0(j), 0.0);
                }
            }
        }
        EngineKind::Schrodinger => {
            let w = e.hbar * e.hbar / (2.0 * e.m * dx * dx);
            for j in 0..n {
                h[(j, (j + 1) % n)] -= c(w, 0.0);
                h[(j, (j + n - 1) % n)] -= c(w, 0.0);
                h[(j, j)] += c(2.0 * w + e.e * a0(j), 0.0);
            }
        }
        EngineKind::Kg => return Err(Error::Config("the kg cross-check uses the leapfrog oracle".into())),
    }
    Ok(linalg::expm(&h.map(|z| z * -I * e.dt / e.hbar)))
}

enum Oracle {
    Dense { step: CMat, state: CVec },
    Leapfrog(Leapfrog),
}

impl Oracle {
    fn gap(&self, engine: EngineKind, physical: &LatticeState, m: f64, hbar: f64) -> Result<f64> {
        match self {
            Oracle::Dense { state, .. } => Ok(physical.data.iter().zip(state.iter()).fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))),
            Oracle::Leapfrog(lf) => {
                debug_assert_eq!(engine, EngineKind::Kg);
                let (phi, _) = kg_from_first_order(physical, m, hbar)?;
                Ok(phi.iter().zip(lf.current()).fold(0.0, |acc, (a, b)| acc.max((a - b).norm())))
            }
        }
    }

    fn advance(&mut self) {
        match self {
            Oracle::Dense { step, state } => *state = &*step * &*state,
            Oracle::Leapfrog(lf) => lf.step(),
        }
    }
}

/// Runs the experiment; writes `timeseries.csv` (and `trajectory.bin`/`.json`
/// when requested) into `out_dir` if given.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentResult> {
    let LatticeConfig { n, dx, origin } = cfg.lattice.clone();
    let engine = SplitStep::new(cfg.engine, n, dx, Boundary::Periodic, cfg.cfg.clone())?;
    let d = cfg.engine.components();
    let triv = cfg.trivialization.build(d)?;
    let metric: Arc<dyn ChartMetric> = match &cfg.metric {
        Some(mc) => mc.build()?,
        None => Arc::new(crate::geometry::Minkowski { n: 2, convention: Convention::MostlyMinus }),
    };
    let want_p = cfg.wants(OutputKind::ExpectationP);
    let mut rows_op = if want_p { Some(momentum_rows(metric.as_ref(), &cfg.lattice, 0.0)?) } else { None };

    let mut physical = initial_state(cfg)?;
    let mut maps = SliceMaps::at(triv.as_ref(), 0.0, origin, dx, n)?;
    let mut section = SliceMaps::apply(&maps.l_inv, &physical);

    let mut oracle = if cfg.crosscheck {
        Some(match cfg.engine {
            EngineKind::Kg => {
                let (phi, dot) = kg_from_first_order(&physical, cfg.cfg.m, cfg.cfg.hbar)?;
                Oracle::Leapfrog(Leapfrog::new(phi, dot, cfg.cfg.m, dx, cfg.cfg.dt))
            }
            _ => Oracle::Dense { step: dense_step(cfg)?, state: physical.as_vector() },
        })
    } else {
        None
    };

    let mut rows = Vec::with_capacity(cfg.cfg.steps + 1);
    let mut frames: Vec<Complex64> = Vec::new();
    let want_traj = cfg.wants(OutputKind::Trajectory);
    for step in 0..=cfg.cfg.steps {
        let t = step as f64 * cfg.cfg.dt;
        if step > 0 {
            // Transport the section: project, evolve, lift at the new time.
            let mut projected = SliceMaps::apply(&maps.l, &section);
            engine.step(&mut projected)?;
            maps = SliceMaps::at(triv.as_ref(), t, origin, dx, n)?;
            section = SliceMaps::apply(&maps.l_inv, &projected);
            engine.step(&mut physical)?;
            if let Some(o) = oracle.as_mut() {
                o.advance();
            }
            if want_p && !metric.time_independent() {
                rows_op = Some(momentum_rows(metric.as_ref(), &cfg.lattice, t)?);
            }
        }
        let observed = SliceMaps::apply(&maps.l, &section);
        let p = rows_op.as_ref().map_or(c(0.0, 0.0), |r| r.expectation(&observed));
        let residual = oracle.as_ref().map(|o| o.gap(cfg.engine, &physical, cfg.cfg.m, cfg.cfg.hbar)).transpose()?;
        rows.push(Row { t, norm: observed.norm(), re_p: p.re, im_p: p.im, residual });
        if want_traj {
            frames.extend_from_slice(&section.data);
        }
    }

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("timeseries.csv");
        write_csv(cfg, &rows, &csv_path)?;
        files.push(csv_path);
        if want_traj {
            let grid = Grid::new(vec![cfg.cfg.steps + 1, n], vec![cfg.cfg.dt, dx], vec![0.0, origin])?;
            let field = Field { grid, components: d, data: frames };
            let bin = dir.join("trajectory.bin");
            let header = field.write(&bin)?;
            files.push(bin);
            files.push(header);
        }
    }
    Ok(ExperimentResult { rows, final_state: physical, final_section: section, files })
}

/// CSV with columns `t`, then `norm`, `re_p`, `im_p` as requested, then `residual` for cross-checks.
pub fn write_csv(cfg: &ExperimentConfig, rows: &[Row], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    let mut header = vec!["t"];
    if cfg.wants(OutputKind::Norm) {
        header.push("norm");
    }
    if cfg.wants(OutputKind::ExpectationP) {
        header.extend(["re_p", "im_p"]);
    }
    if cfg.crosscheck {
        header.push("residual");
    }
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        let mut rec = vec![r.t.to_string()];
        if cfg.wants(OutputKind::Norm) {
            rec.push(r.norm.to_string());
        }
        if cfg.wants(OutputKind::ExpectationP) {
            rec.push(r.re_p.to_string());
            rec.push(r.im_p.to_string());
        }
        if let Some(res) = r.residual {
            rec.push(res.to_string());
        }
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Lattice wavenumber of an FFT bin, re-exported for config authors.
pub fn mode_wavenumber(mode: usize, n: usize, dx: f64) -> f64 {
    wavenumber(mode, n, dx)
}
