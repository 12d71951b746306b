//! Executable invariant checks grouped into suites, with optional fault injection.
//!
//! Every random input is drawn from a `ChaCha8Rng` seeded from the suite seed,
//! so a report is a pure function of `(suite, seed, perturb, tolerance_scale)`
//! apart from its wall time.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{
    bundle_gammas, bundle_relation_residual, conjugate_operator, evolution_transport, hamiltonian_from_transport, path_derivation_local,
    FnLifting, FnTrivialization, PathSpec, Propagator, RandomSmoothTrivialization, SteppedPropagator, Trivialization,
};
use crate::clifford::{self, check_matrix_isomorphism, geometric_product, grade_project, make_algebra, Multivector};
use crate::error::{Error, Result};
use crate::evolution::engine::{dirac_evolve_1p1, EvolutionConfig, LatticeState};
use crate::evolution::kg::{kg_first_order, kg_from_first_order, kg_gaussian, kg_oracle_gap, field_distance};
use crate::evolution::observables::{dirac_hermiticity_residual, momentum_operator, spin_vector_assemble, stress_energy_contract, SliceGeometry};
use crate::evolution::propagate::time_ordered_evolve;
use crate::gamma::{dirac_gammas, dual_gammas, spin_rotate, spin_transform, Convention, MatrixRep};
use crate::geometry::lattice::{Field, Grid};
use crate::geometry::{
    dalembert_factorization_check, spin_connection_at, spin_curvature_at, vierbein_at, ChartMetric, Frw1p1, Minkowski, PolarFlat2d, Rindler1p1,
};
use crate::linalg::{self, c, CMat, RMat, I};

pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Clifford,
    Gamma,
    Geometry,
    Bundle,
    Evolution,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 5] = [Suite::Clifford, Suite::Gamma, Suite::Geometry, Suite::Bundle, Suite::Evolution];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Clifford => "clifford",
            Suite::Gamma => "gamma",
            Suite::Geometry => "geometry",
            Suite::Bundle => "bundle",
            Suite::Evolution => "evolution",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::MODULES
            .iter()
            .chain([Suite::All].iter())
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}' (expected clifford, gamma, geometry, bundle, evolution or all)")))
    }
}

/// One named measurement against a tolerance. `passed` is `measured <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub rng: String,
    pub seed: u64,
    pub perturb: f64,
    pub tolerance_scale: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl VerificationReport {
    /// Report with the wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        VerificationReport { wall_time_s: 0.0, ..self.clone() }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// CSV with one row per check.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "measured", "tolerance", "passed"]).map_err(|e| Error::Io(e.to_string()))?;
        for ch in &self.checks {
            w.write_record([ch.name.clone(), ch.measured.to_string(), ch.tolerance.to_string(), ch.passed.to_string()])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Magnitude of noise injected into check inputs; 0 disables it.
    pub perturb: f64,
    pub tolerance_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, perturb: 0.0, tolerance_scale: 1.0 }
    }
}

/// Collects checks for one suite.
struct Ctx {
    suite: &'static str,
    rng: ChaCha8Rng,
    fault: ChaCha8Rng,
    perturb: f64,
    scale: f64,
    checks: Vec<Check>,
}

impl Ctx {
    fn new(suite: Suite, opts: &VerifyOptions) -> Self {
        let salt = Suite::MODULES.iter().position(|s| *s == suite).unwrap_or(0) as u64;
        Ctx {
            suite: suite.name(),
            rng: ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(6364136223846793005).wrapping_add(salt)),
            fault: ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_fa17 ^ (salt << 32)),
            perturb: opts.perturb,
            scale: opts.tolerance_scale,
            checks: Vec::new(),
        }
    }

    fn record(&mut self, name: &str, measured: f64, tolerance: f64) {
        let tolerance = tolerance * self.scale;
        self.checks.push(Check { name: format!("{}.{name}", self.suite), measured, tolerance, passed: measured <= tolerance });
    }

    /// Records a failure with `measured = inf` when the computation itself errors.
    fn record_with(&mut self, name: &str, tolerance: f64, f: impl FnOnce(&mut Self) -> Result<f64>) {
        let measured = f(self).unwrap_or(f64::INFINITY);
        let measured = if measured.is_nan() { f64::INFINITY } else { measured };
        self.record(name, measured, tolerance);
    }

    fn noisy(&mut self, m: &CMat) -> CMat {
        if self.perturb == 0.0 {
            return m.clone();
        }
        m + linalg::random_complex(&mut self.fault, m.nrows(), m.ncols()).scale(self.perturb)
    }

    fn noisy_real(&mut self, m: &RMat) -> RMat {
        if self.perturb == 0.0 {
            return m.clone();
        }
        let p = self.perturb;
        m + RMat::from_fn(m.nrows(), m.ncols(), |_, _| p * self.fault.gen_range(-1.0..1.0))
    }

    fn noisy_scalar(&mut self, x: f64) -> f64 {
        if self.perturb == 0.0 {
            x
        } else {
            x + self.perturb * self.fault.gen_range(0.5..1.0)
        }
    }
}

/// Runs one suite, or every suite in parallel for [`Suite::All`]. Checks are sorted by name.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> VerificationReport {
    let start = Instant::now();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::MODULES.to_vec() } else { vec![suite] };
    let mut checks: Vec<Check> = suites.par_iter().flat_map_iter(|s| module_checks(*s, opts)).collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = checks.iter().all(|c| c.passed);
    VerificationReport {
        suite: suite.name().to_string(),
        rng: RNG_NAME.to_string(),
        seed: opts.seed,
        perturb: opts.perturb,
        tolerance_scale: opts.tolerance_scale,
        checks,
        passed,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

fn module_checks(suite: Suite, opts: &VerifyOptions) -> Vec<Check> {
    let mut ctx = Ctx::new(suite, opts);
    match suite {
        Suite::Clifford => clifford_checks(&mut ctx),
        Suite::Gamma => gamma_checks(&mut ctx),
        Suite::Geometry => geometry_checks(&mut ctx),
        Suite::Bundle => bundle_checks(&mut ctx),
        Suite::Evolution => evolution_checks(&mut ctx),
        Suite::All => unreachable!("expanded by run_suite"),
    }
    ctx.checks
}

const SIGNATURES: [(usize, usize); 4] = [(3, 1), (1, 3), (2, 0), (1, 1)];

fn random_multivector(rng: &mut ChaCha8Rng, alg: &Arc<clifford::Algebra>) -> Result<Multivector> {
    Multivector::from_coeffs(alg, (0..alg.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn clifford_checks(ctx: &mut Ctx) {
    for (p, q) in SIGNATURES {
        let tag = format!("cl{p}{q}");
        ctx.record_with(&format!("relations.{tag}"), 0.0, |_| {
            let alg = make_algebra(p, q)?;
            Ok(if alg.generator_relations_hold() { 0.0 } else { 1.0 })
        });
        ctx.record_with(&format!("associativity.{tag}"), 1e-12, |ctx| {
            let alg = make_algebra(p, q)?;
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let (a, b, cc) = (random_multivector(&mut ctx.rng, &alg)?, random_multivector(&mut ctx.rng, &alg)?, random_multivector(&mut ctx.rng, &alg)?);
                let lhs = geometric_product(&geometric_product(&a, &b)?, &cc)?;
                let rhs = geometric_product(&a, &geometric_product(&b, &cc)?)?;
                worst = worst.max(lhs.sub(&rhs)?.max_abs());
            }
            Ok(worst)
        });
        ctx.record_with(&format!("grade_partition.{tag}"), 1e-12, |ctx| {
            let alg = make_algebra(p, q)?;
            let a = random_multivector(&mut ctx.rng, &alg)?;
            let mut sum = Multivector::zero(&alg);
            let mut worst: f64 = 0.0;
            for k in 0..=alg.n() {
                let pk = grade_project(&a, k)?;
                worst = worst.max(grade_project(&pk, k)?.sub(&pk)?.max_abs());
                sum = sum.add(&pk)?;
            }
            Ok(worst.max(sum.sub(&a)?.max_abs()))
        });
    }
    // Faithful 2x2 representations of the two four-dimensional algebras.
    let sx = linalg::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]]);
    let sz = linalg::from_rows(&[&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(-1.0, 0.0)]]);
    let j = linalg::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(-1.0, 0.0), c(0.0, 0.0)]]);
    for (p, q, rep) in [(2, 0, vec![sx.clone(), sz]), (1, 1, vec![sx, j])] {
        let tag = format!("cl{p}{q}");
        let rep: Vec<CMat> = rep.iter().map(|m| ctx.noisy(m)).collect();
        let report = make_algebra(p, q).and_then(|alg| check_matrix_isomorphism(&alg, &rep));
        match report {
            Ok(r) => {
                ctx.record(&format!("isomorphism.{tag}.relations"), r.relation_residual, 1e-12);
                ctx.record(&format!("isomorphism.{tag}.blade_rank_deficit"), (r.algebra_dim as f64 - r.blade_rank as f64).abs(), 0.0);
            }
            Err(_) => ctx.record(&format!("isomorphism.{tag}.relations"), f64::INFINITY, 1e-12),
        }
    }
}

fn perturbed_rep(ctx: &mut Ctx, rep: &MatrixRep) -> MatrixRep {
    MatrixRep { metric: rep.metric.clone(), gammas: rep.gammas.iter().map(|g| ctx.noisy(g)).collect() }
}

fn gamma_checks(ctx: &mut Ctx) {
    for (conv, tag) in [(Convention::MostlyMinus, "mm"), (Convention::MostlyPlus, "mp")] {
        let rep = dirac_gammas(conv);
        let noisy = perturbed_rep(ctx, &rep);
        ctx.record(&format!("relations.{tag}"), noisy.relation_residual(), 1e-12);
        ctx.record_with(&format!("isomorphism.{tag}"), 1e-12, |_| {
            let sig = noisy.signature()?;
            let r = check_matrix_isomorphism(&*make_algebra(sig.p, sig.q)?, &noisy.generators_in_algebra_order())?;
            Ok(if r.faithful { r.relation_residual } else { f64::INFINITY })
        });
        ctx.record_with(&format!("rotation_composition.{tag}"), 1e-10, |ctx| {
            let (a, b) = (ctx.rng.gen_range(-PI..PI), ctx.rng.gen_range(-PI..PI));
            let lhs = spin_rotate(&rep, 1, 2, a)? * spin_rotate(&rep, 1, 2, b)?;
            let rhs = ctx.noisy(&spin_rotate(&rep, 1, 2, a + b)?);
            Ok(linalg::max_diff(&lhs, &rhs))
        });
        ctx.record_with(&format!("double_cover.{tag}"), 1e-10, |ctx| {
            let full = ctx.noisy(&spin_rotate(&rep, 1, 2, 2.0 * PI)?);
            let twice = spin_rotate(&rep, 1, 2, 4.0 * PI)?;
            let id = linalg::eye(4);
            Ok(linalg::max_diff(&full, &id.scale(-1.0)).max(linalg::max_diff(&twice, &id)))
        });
        ctx.record_with(&format!("dual_trace.{tag}"), 1e-12, |_| {
            let g = RMat::from_diagonal(&rep.metric.diagonal());
            let dual = dual_gammas(&noisy, &g)?;
            let sum = noisy.gammas.iter().zip(&dual.gammas).fold(CMat::zeros(4, 4), |acc, (a, b)| acc + a * b);
            Ok(linalg::max_diff(&sum, &linalg::eye(4).scale(4.0)))
        });
    }
}

fn frw_dalembert_residual(n: usize) -> Result<f64> {
    let metric = Frw1p1 { eps: 0.5, accel: 1.0 };
    let grid = Grid::cube(n + 1, &[0.0, 0.0], &[1.0, 1.0])?;
    let phi = Field::from_fn(grid, 1, |x| vec![c((1.3 * x[0]).sin() * (2.0 * x[1]).cos() + 0.4 * x[0] * x[1] * x[1], 0.0)]);
    Ok(dalembert_factorization_check(&phi, &metric)?.max_residual)
}

fn geometry_checks(ctx: &mut Ctx) {
    let metrics: Vec<(&str, Box<dyn ChartMetric>)> = vec![
        ("minkowski", Box::new(Minkowski { n: 4, convention: Convention::MostlyPlus })),
        ("polar_flat_2d", Box::new(PolarFlat2d)),
        ("frw_1p1", Box::new(Frw1p1::linear(0.1))),
        ("rindler_1p1", Box::new(Rindler1p1 { alpha: 0.5 })),
    ];
    for (name, metric) in &metrics {
        let n = metric.dim();
        let points: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..n).map(|_| ctx.rng.gen_range(0.5..2.0)).collect())
            .collect();
        ctx.record_with(&format!("vierbein_round_trip.{name}"), 1e-10, |ctx| {
            let mut worst: f64 = 0.0;
            for x in &points {
                let mut v = vierbein_at(metric.as_ref(), x)?;
                v.e = ctx.noisy_real(&v.e);
                worst = worst.max((v.metric() - metric.g(x)).amax());
            }
            Ok(worst)
        });
        ctx.record_with(&format!("omega_antisymmetry.{name}"), 0.0, |_| {
            let mut worst: f64 = 0.0;
            for x in &points {
                let sc = spin_connection_at(metric.as_ref(), x)?;
                for a in 0..n {
                    for b in 0..n {
                        for mu in 0..n {
                            worst = worst.max((sc.data.omega(a, b, mu) + sc.data.omega(b, a, mu)).abs());
                        }
                    }
                }
            }
            Ok(worst)
        });
        ctx.record_with(&format!("omega_forms_agree.{name}"), 1e-12, |_| {
            let mut worst: f64 = 0.0;
            for x in &points {
                worst = worst.max(spin_connection_at(metric.as_ref(), x)?.form_agreement);
            }
            Ok(worst)
        });
    }
    ctx.record_with("minkowski_omega_zero", 1e-14, |ctx| {
        let m = Minkowski { n: 4, convention: Convention::MostlyMinus };
        let x: Vec<f64> = (0..4).map(|_| ctx.rng.gen_range(-2.0..2.0)).collect();
        let sc = spin_connection_at(&m, &x)?;
        let worst = sc.omega_matrices.iter().map(|o| linalg::max_abs(&ctx.noisy(o))).fold(0.0, f64::max);
        Ok(worst)
    });
    ctx.record_with("polar_curvature_zero", 1e-5, |ctx| {
        let x = [ctx.rng.gen_range(1.0..3.0), ctx.rng.gen_range(-PI..PI)];
        let r = spin_curvature_at(&PolarFlat2d, &x, 1e-3)?;
        Ok(ctx.noisy_scalar(r.iter().fold(0.0, |m, v| m.max(v.abs()))))
    });
    ctx.record_with("polar_omega_nonzero_deficit", 0.0, |ctx| {
        let x = [ctx.rng.gen_range(1.0..3.0), 0.3];
        let w = spin_connection_at(&PolarFlat2d, &x)?.data.max_abs_omega();
        Ok(if w > 0.5 { 0.0 } else { 1.0 })
    });
    ctx.record_with("dalembert_order_shortfall", 0.0, |ctx| {
        let r = [ctx.noisy_scalar(frw_dalembert_residual(32)?), ctx.noisy_scalar(frw_dalembert_residual(64)?)];
        Ok((1.9 - (r[0] / r[1]).log2()).max(0.0))
    });
}

fn worldline(t1: f64) -> Result<PathSpec> {
    PathSpec::new(|t| vec![t, 0.4 * t.sin()], 0.0, t1, 101)
}

fn bundle_checks(ctx: &mut Ctx) {
    let rep = dirac_gammas(Convention::MostlyMinus);
    let eta_up = Convention::MostlyMinus.eta(4);
    ctx.record_with("gamma_relations_random_trivializations", 1e-12, |ctx| {
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let l = RandomSmoothTrivialization::new(4, ctx.rng.gen(), ctx.rng.gen_range(0.05..0.45))?;
            let x: Vec<f64> = (0..4).map(|_| ctx.rng.gen_range(-1.0..1.0)).collect();
            let gs: Vec<CMat> = bundle_gammas(&l, &x, &rep)?.iter().map(|g| ctx.noisy(g)).collect();
            worst = worst.max(bundle_relation_residual(&gs, &eta_up));
        }
        Ok(worst)
    });
    ctx.record_with("transport_laws", 1e-10, |ctx| {
        let seed: u64 = ctx.rng.gen();
        let prop = Arc::new(SteppedPropagator::random_unitary(4, seed, 0.0, 1.0, 50)?);
        let l = Arc::new(RandomSmoothTrivialization::new(4, seed ^ 1, 0.4)?);
        let u = evolution_transport(prop, l, worldline(1.0)?)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let (t, s, r) = (ctx.rng.gen_range(0.0..1.0), ctx.rng.gen_range(0.0..1.0), ctx.rng.gen_range(0.0..1.0));
            worst = worst.max(u.identity_residual(t)?);
            let lhs = ctx.noisy(&u.u(t, s)?) * u.u(s, r)?;
            worst = worst.max(linalg::max_diff(&lhs, &u.u(t, r)?));
        }
        Ok(worst)
    });
    ctx.record_with("connection_hamiltonian_round_trip", 1e-6, |ctx| {
        let h0 = linalg::random_hermitian(&mut ctx.rng, 4);
        let hb = h0.clone();
        let prop = Arc::new(SteppedPropagator::from_hamiltonian(move |_| hb.clone(), 1.0, 0.0, 1.0, 1000)?);
        let u = evolution_transport(prop, Arc::new(crate::bundle::IdentityTrivialization { d: 4 }), worldline(1.0)?)?;
        let rebuilt = ctx.noisy(&hamiltonian_from_transport(&u, 0.0, 0.5, 1e-3, 1.0)?);
        Ok(linalg::max_diff(&rebuilt, &h0))
    });
    ctx.record_with("path_derivation_slope_error", 0.1, |ctx| {
        let h0 = linalg::random_hermitian(&mut ctx.rng, 4);
        let h1 = linalg::random_hermitian(&mut ctx.rng, 4);
        let prop = Arc::new(SteppedPropagator::from_hamiltonian(move |t| &h0 + h1.scale(t), 1.0, 0.0, 1.0, 4000)?);
        let l: Arc<dyn Trivialization> = Arc::new(RandomSmoothTrivialization::new(4, ctx.rng.gen(), 0.4)?);
        let u = evolution_transport(prop.clone(), l, worldline(1.0)?)?;
        let psi0 = linalg::random_vector(&mut ctx.rng, 4);
        let uu = u.clone();
        let p = ctx.perturb;
        // Injected faults are sample noise keyed on the evaluation time.
        let lifted = FnLifting(move |t: f64| {
            let clean = uu.lift_at(t, &(prop.evolve(t, 0.0) * &psi0)).unwrap();
            if p == 0.0 {
                return clean;
            }
            clean + linalg::random_vector(&mut ChaCha8Rng::seed_from_u64(t.to_bits()), 4).scale(p)
        });
        let r0 = path_derivation_local(&lifted, &u, 0.4, 1e-2)?.norm();
        let r1 = path_derivation_local(&lifted, &u, 0.4, 1e-3)?.norm();
        Ok(((r0 / r1).log10() - 1.0).abs())
    });
    ctx.record_with("trivialization_independence", 1e-10, |ctx| {
        let l = RandomSmoothTrivialization::new(4, ctx.rng.gen(), 0.4)?;
        let x = [0.3, -0.2];
        let op = linalg::random_hermitian(&mut ctx.rng, 4);
        let psi = linalg::random_vector(&mut ctx.rng, 4);
        let conj = ctx.noisy(&conjugate_operator(&l, &x, &op)?);
        let spectral = linalg::spectrum_distance(&linalg::eigenvalues(&op), &linalg::eigenvalues(&conj));
        let big = crate::bundle::lift_state(&l, &x, &psi)?;
        let down = psi.dotc(&(&op * &psi));
        let lp = l.l(&x) * &big;
        let up = lp.dotc(&(&op * &lp));
        Ok(spectral.max((down - up).norm()))
    });
}

fn evolution_checks(ctx: &mut Ctx) {
    ctx.record_with("propagator_unitarity", 1e-10, |ctx| {
        let h0 = linalg::random_hermitian(&mut ctx.rng, 4);
        let h1 = linalg::random_hermitian(&mut ctx.rng, 4);
        let psi = linalg::random_vector(&mut ctx.rng, 4);
        let (_, u) = time_ordered_evolve(|t| &h0 + h1.scale(t), &psi, 0.0, 1.0, 200, 1.0)?;
        Ok(linalg::unitarity_residual(&ctx.noisy(&u)))
    });
    ctx.record_with("propagator_order_error", 0.1, |ctx| {
        let h0 = linalg::random_hermitian(&mut ctx.rng, 3);
        let h1 = linalg::random_hermitian(&mut ctx.rng, 3);
        let psi = linalg::random_vector(&mut ctx.rng, 3);
        let h = |t: f64| &h0 + h1.scale(t.sin());
        let mut reference = time_ordered_evolve(h, &psi, 0.0, 1.0, 8000, 1.0)?.0;
        if ctx.perturb > 0.0 {
            reference += linalg::random_vector(&mut ctx.fault, 3).scale(ctx.perturb);
        }
        let e1 = (time_ordered_evolve(h, &psi, 0.0, 1.0, 50, 1.0)?.0 - &reference).norm();
        let e2 = (time_ordered_evolve(h, &psi, 0.0, 1.0, 100, 1.0)?.0 - &reference).norm();
        Ok(((e1 / e2).log2() - 2.0).abs())
    });
    ctx.record_with("norm_drift_per_step", 1e-13, |ctx| {
        let (n, dx, steps) = (64, 0.25, 100);
        let k = ctx.rng.gen_range(0.5..1.5);
        let s0 = LatticeState::from_fn(n, dx, 2, |x| {
            let env = (I * k * x).exp() * (-(x - 8.0).powi(2) / 2.0).exp();
            vec![env, env * 0.3]
        });
        let traj = dirac_evolve_1p1(&s0, &EvolutionConfig::free(0.02, steps, 0.0))?;
        let drift = traj.iter().fold(0.0, |m: f64, s| m.max((s.norm() - s0.norm()).abs()));
        Ok(ctx.noisy_scalar(drift) / steps as f64)
    });
    ctx.record_with("kg_round_trip", 1e-14, |ctx| {
        let m = ctx.rng.gen_range(0.5..2.0);
        let (phi, dot) = kg_gaussian(64, 0.2, 6.0, 1.0, 0.8, m);
        let s = kg_first_order(&phi, &dot, m, 1.0, 0.2)?;
        let (p2, d2) = kg_from_first_order(&s, m, 1.0)?;
        Ok(ctx.noisy_scalar(field_distance(&phi, &p2).max(field_distance(&dot, &d2))))
    });
    ctx.record_with("kg_oracle_order_error", 0.1, |ctx| {
        let (n, l) = (128, 25.6);
        let dx = l / n as f64;
        let e1 = ctx.noisy_scalar(kg_oracle_gap(n, dx, 1.0, 0.04, 100, 12.8, 1.5, 1.0)?);
        let e2 = ctx.noisy_scalar(kg_oracle_gap(n, dx, 1.0, 0.02, 200, 12.8, 1.5, 1.0)?);
        Ok(((e1 / e2).log2() - 2.0).abs())
    });
    ctx.record_with("momentum_dirac_hermiticity", 1e-12, |ctx| {
        let rep = MatrixRep::lorentzian_2d(Convention::MostlyMinus);
        let m = Minkowski { n: 2, convention: Convention::MostlyMinus };
        let p = momentum_operator(&SliceGeometry::periodic(16, 0.3), &rep, &m)?;
        Ok(dirac_hermiticity_residual(&ctx.noisy(&p), &rep))
    });
    ctx.record_with("spin_vector_bundle_covariance", 1e-10, |ctx| {
        let rep = dirac_gammas(Convention::MostlyMinus);
        let d = 3;
        let h = linalg::random_hermitian(&mut ctx.rng, d);
        let p: Vec<CMat> = (0..3).map(|_| linalg::random_hermitian(&mut ctx.rng, d)).collect();
        let l = Arc::new(RandomSmoothTrivialization::new(d, ctx.rng.gen(), 0.4)?);
        let lk = l.clone();
        let big = FnTrivialization::new(d * 4, move |x| linalg::kron(&lk.l(x), &linalg::eye(4)));
        let x = [0.1, 0.2];
        let conj = |m: &CMat| conjugate_operator(l.as_ref(), &x, m);
        let pc: Vec<CMat> = p.iter().map(conj).collect::<Result<_>>()?;
        let lhs = spin_vector_assemble(&conj(&h)?, &pc, &rep)?.aggregate;
        let rhs = conjugate_operator(&big, &x, &spin_vector_assemble(&h, &p, &rep)?.aggregate)?;
        Ok(linalg::max_diff(&ctx.noisy(&lhs), &rhs))
    });
    ctx.record_with("stress_energy_trace", 1e-12, |ctx| {
        let rep = dirac_gammas(Convention::MostlyMinus);
        let eta = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(Convention::MostlyMinus.eta(4)));
        let t = stress_energy_contract(&eta, &rep)?;
        Ok(linalg::max_diff(&ctx.noisy(&t), &linalg::eye(4).scale(4.0)))
    });
    ctx.record_with("stress_energy_boost_covariance", 1e-8, |ctx| {
        let rep = dirac_gammas(Convention::MostlyMinus);
        let t = RMat::from_fn(4, 4, |_, _| ctx.rng.gen_range(-1.0..1.0));
        let phi = ctx.rng.gen_range(0.01..0.1);
        let s = spin_transform(&rep, 0, 1, phi)?;
        let (ch, sh) = (phi.cosh(), phi.sinh());
        let mut lambda = RMat::identity(4, 4);
        lambda[(0, 0)] = ch;
        lambda[(1, 1)] = ch;
        lambda[(0, 1)] = -sh;
        lambda[(1, 0)] = -sh;
        let boosted = &lambda * &t * lambda.transpose();
        let lhs = linalg::guarded_inverse(&s)? * stress_energy_contract(&boosted, &rep)? * &s;
        Ok(linalg::max_diff(&ctx.noisy(&lhs), &stress_energy_contract(&t, &rep)?))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_unperturbed() {
        for s in Suite::MODULES {
            let r = run_suite(s, &VerifyOptions { seed: 3, ..Default::default() });
            let failed: Vec<_> = r.failures().collect();
            assert!(r.passed, "{failed:?}");
        }
    }

    #[test]
    fn perturbation_fails_every_suite() {
        for s in Suite::MODULES {
            let r = run_suite(s, &VerifyOptions { seed: 3, perturb: 1e-3, tolerance_scale: 1.0 });
            assert!(!r.passed, "{}", s.name());
        }
    }

    #[test]
    fn perturbation_breaks_convergence_checks() {
        let r = run_suite(Suite::All, &VerifyOptions { seed: 2, perturb: 1e-3, tolerance_scale: 1.0 });
        for name in [
            "bundle.path_derivation_slope_error",
            "evolution.kg_oracle_order_error",
            "evolution.propagator_order_error",
            "geometry.dalembert_order_shortfall",
        ] {
            let c = r.checks.iter().find(|c| c.name == name).unwrap();
            assert!(!c.passed, "{c:?}");
        }
    }

    #[test]
    fn checks_are_sorted_and_named() {
        let r = run_suite(Suite::Clifford, &VerifyOptions::default());
        assert!(r.checks.windows(2).all(|w| w[0].name < w[1].name));
        assert!(r.checks.iter().all(|c| c.name.starts_with("clifford.")));
        assert!("nope".parse::<Suite>().is_err());
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
    }

    #[test]
    fn tolerance_scale_multiplies() {
        let r = run_suite(Suite::Gamma, &VerifyOptions { seed: 1, perturb: 0.0, tolerance_scale: 10.0 });
        let c = r.checks.iter().find(|c| c.name == "gamma.relations.mm").unwrap();
        assert_eq!(c.tolerance, 1e-11);
    }
}
