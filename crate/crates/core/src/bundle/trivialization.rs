//! Fibre trivializations `l_x` and the operations that move objects through them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::MatrixRep;
use crate::linalg::{self, c, CMat, CVec};

/// Pointwise invertible fibre maps `l_x : F_x → ℱ`.
pub trait Trivialization: Send + Sync {
    fn fibre_dim(&self) -> usize;

    fn l(&self, x: &[f64]) -> CMat;

    /// `l_x⁻¹`; the default inverts `l(x)` under the condition-number guard.
    fn l_inv(&self, x: &[f64]) -> Result<CMat> {
        linalg::guarded_inverse(&self.l(x))
    }

    fn describe(&self) -> String;
}

impl fmt::Debug for dyn Trivialization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Trivialization({})", self.describe())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityTrivialization {
    pub d: usize,
}

impl Trivialization for IdentityTrivialization {
    fn fibre_dim(&self) -> usize {
        self.d
    }
    fn l(&self, _x: &[f64]) -> CMat {
        linalg::eye(self.d)
    }
    fn l_inv(&self, _x: &[f64]) -> Result<CMat> {
        Ok(linalg::eye(self.d))
    }
    fn describe(&self) -> String {
        "identity".into()
    }
}

/// `l_x = c · 1` for every point.
#[derive(Debug, Clone, Copy)]
pub struct ScalarTrivialization {
    pub d: usize,
    pub c: Complex64,
}

impl Trivialization for ScalarTrivialization {
    fn fibre_dim(&self) -> usize {
        self.d
    }
    fn l(&self, _x: &[f64]) -> CMat {
        linalg::eye(self.d).map(|z| z * self.c)
    }
    fn l_inv(&self, _x: &[f64]) -> Result<CMat> {
        if self.c.norm() < 1.0 / linalg::CONDITION_LIMIT {
            return Err(Error::Singular { cond: f64::INFINITY });
        }
        Ok(linalg::eye(self.d).map(|z| z / self.c))
    }
    fn describe(&self) -> String {
        format!("scalar:{}", self.c.re)
    }
}

const WAVES: usize = 3;
const MAX_COORDS: usize = 4;

/// `l_x = 1 + c(x) u v†` with unit `u, v` and a smooth real `|c(x)| ≤ amplitude`.
///
/// Invertible for `amplitude < 1`; configs are capped at 0.5.
#[derive(Debug, Clone)]
pub struct RandomSmoothTrivialization {
    pub d: usize,
    pub seed: u64,
    pub amplitude: f64,
    u: CVec,
    v: CVec,
    freqs: Vec<[f64; MAX_COORDS]>,
    phases: Vec<f64>,
}

impl RandomSmoothTrivialization {
    pub fn new(d: usize, seed: u64, amplitude: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&amplitude) {
            return Err(Error::Config(format!("random_smooth amplitude must lie in [0, 0.5), got {amplitude}")));
        }
        if d == 0 {
            return Err(Error::Config("fibre dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = |rng: &mut ChaCha8Rng| {
            let v = linalg::random_vector(rng, d);
            let n = v.norm();
            v / c(n, 0.0)
        };
        let u = unit(&mut rng);
        let v = unit(&mut rng);
        let freqs = (0..WAVES).map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0))).collect();
        let phases = (0..WAVES).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        Ok(RandomSmoothTrivialization { d, seed, amplitude, u, v, freqs, phases })
    }

    fn coefficient(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .freqs
            .iter()
            .zip(&self.phases)
            .map(|(k, ph)| (k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ph).sin())
            .sum();
        self.amplitude * s / WAVES as f64
    }

    fn rank_one(&self) -> CMat {
        &self.u * self.v.adjoint()
    }
}

impl Trivialization for RandomSmoothTrivialization {
    fn fibre_dim(&self) -> usize {
        self.d
    }
    fn l(&self, x: &[f64]) -> CMat {
        linalg::eye(self.d) + self.rank_one().map(|z| z * self.coefficient(x))
    }
    /// Sherman–Morrison.
    fn l_inv(&self, x: &[f64]) -> Result<CMat> {
        let cx = self.coefficient(x);
        let denom = c(1.0, 0.0) + self.v.dotc(&self.u) * cx;
        Ok(linalg::eye(self.d) - self.rank_one().map(|z| z * cx / denom))
    }
    fn describe(&self) -> String {
        format!("random_smooth:{}:{}", self.seed, self.amplitude)
    }
}

/// Closure-backed trivialization; the inverse is computed numerically.
pub struct FnTrivialization {
    d: usize,
    f: Box<dyn Fn(&[f64]) -> CMat + Send + Sync>,
}

impl FnTrivialization {
    pub fn new(d: usize, f: impl Fn(&[f64]) -> CMat + Send + Sync + 'static) -> Self {
        FnTrivialization { d, f: Box::new(f) }
    }
}

impl Trivialization for FnTrivialization {
    fn fibre_dim(&self) -> usize {
        self.d
    }
    fn l(&self, x: &[f64]) -> CMat {
        (self.f)(x)
    }
    fn describe(&self) -> String {
        "custom".into()
    }
}

/// Config form; also accepts the strings `identity`, `scalar:C` and `random_smooth:SEED:AMPLITUDE`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrivializationConfig {
    Identity,
    Scalar { c: f64 },
    RandomSmooth { seed: u64, amplitude: f64 },
}

impl Default for TrivializationConfig {
    fn default() -> Self {
        TrivializationConfig::Identity
    }
}

impl TrivializationConfig {
    pub fn build(&self, d: usize) -> Result<Arc<dyn Trivialization>> {
        Ok(match *self {
            TrivializationConfig::Identity => Arc::new(IdentityTrivialization { d }),
            TrivializationConfig::Scalar { c: value } => {
                if value == 0.0 || !value.is_finite() {
                    return Err(Error::Config(format!("scalar trivialization needs a finite nonzero c, got {value}")));
                }
                Arc::new(ScalarTrivialization { d, c: c(value, 0.0) })
            }
            TrivializationConfig::RandomSmooth { seed, amplitude } => Arc::new(RandomSmoothTrivialization::new(d, seed, amplitude)?),
        })
    }
}

impl FromStr for TrivializationConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("cannot parse trivialization '{s}'"));
        match parts.as_slice() {
            ["identity"] => Ok(TrivializationConfig::Identity),
            ["scalar", v] => Ok(TrivializationConfig::Scalar { c: v.parse().map_err(|_| bad())? }),
            ["random_smooth", seed, amp] => Ok(TrivializationConfig::RandomSmooth {
                seed: seed.parse().map_err(|_| bad())?,
                amplitude: amp.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Deserializes either the tagged object or the string shorthand.
pub fn deserialize_trivialization<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<TrivializationConfig, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Text(String),
        Object(TrivializationConfig),
    }
    match Either::deserialize(d)? {
        Either::Text(s) => s.parse().map_err(de::Error::custom),
        Either::Object(o) => Ok(o),
    }
}

fn check_dim(l: &dyn Trivialization, n: usize) -> Result<()> {
    if l.fibre_dim() != n {
        return Err(Error::DimensionMismatch(format!("fibre dimension {} vs object of size {n}", l.fibre_dim())));
    }
    Ok(())
}

/// Guarded `l_x⁻¹`: rejects maps whose condition number exceeds the limit.
fn guarded_l_inv(l: &dyn Trivialization, x: &[f64]) -> Result<CMat> {
    let lx = l.l(x);
    let cond = linalg::condition_number(&lx);
    if !cond.is_finite() || cond > linalg::CONDITION_LIMIT {
        return Err(Error::Singular { cond });
    }
    l.l_inv(x)
}

/// `Ψ = l_x⁻¹ ψ`.
pub fn lift_state(l: &dyn Trivialization, x: &[f64], psi: &CVec) -> Result<CVec> {
    check_dim(l, psi.len())?;
    Ok(guarded_l_inv(l, x)? * psi)
}

/// `ψ = l_x Ψ`.
pub fn project_state(l: &dyn Trivialization, x: &[f64], big_psi: &CVec) -> Result<CVec> {
    check_dim(l, big_psi.len())?;
    Ok(l.l(x) * big_psi)
}

/// `l_x⁻¹ · op · l_x`.
pub fn conjugate_operator(l: &dyn Trivialization, x: &[f64], op: &CMat) -> Result<CMat> {
    check_dim(l, op.nrows())?;
    Ok(guarded_l_inv(l, x)? * op * l.l(x))
}

/// Bundle generators `G^μ = l_x⁻¹ γ^μ l_x`.
pub fn bundle_gammas(l: &dyn Trivialization, x: &[f64], rep: &MatrixRep) -> Result<Vec<CMat>> {
    let l_inv = guarded_l_inv(l, x)?;
    check_dim(l, rep.spinor_dim())?;
    let lx = l.l(x);
    Ok(rep.raised().iter().map(|g| &l_inv * g * &lx).collect())
}

/// Largest residual of `{G^μ, G^ν} = 2 η^μν 1`.
pub fn bundle_relation_residual(gs: &[CMat], eta_up: &[f64]) -> f64 {
    let d = gs[0].nrows();
    let mut worst: f64 = 0.0;
    for (mu, a) in gs.iter().enumerate() {
        for (nu, b) in gs.iter().enumerate() {
            let target = if mu == nu { 2.0 * eta_up[mu] } else { 0.0 };
            let r = linalg::anticommutator(a, b) - linalg::eye(d).scale(target);
            worst = worst.max(linalg::max_abs(&r));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::{dirac_gammas, Convention};

    #[test]
    fn identity_and_scalar_lifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = linalg::random_vector(&mut rng, 4);
        let id = IdentityTrivialization { d: 4 };
        assert_eq!(lift_state(&id, &[0.0], &psi).unwrap(), psi);
        let two = ScalarTrivialization { d: 4, c: c(2.0, 0.0) };
        assert!((lift_state(&two, &[0.3], &psi).unwrap() - psi.map(|z| z / 2.0)).norm() < 1e-15);
        let zero = ScalarTrivialization { d: 4, c: c(0.0, 0.0) };
        assert!(matches!(lift_state(&zero, &[0.3], &psi), Err(Error::Singular { .. })));
    }

    #[test]
    fn random_smooth_inverse_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..20 {
            let l = RandomSmoothTrivialization::new(4, seed, 0.45).unwrap();
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            assert!(linalg::max_diff(&(l.l(&x) * l.l_inv(&x).unwrap()), &linalg::eye(4)) < 1e-12);
            let psi = linalg::random_vector(&mut rng, 4);
            let back = project_state(&l, &x, &lift_state(&l, &x, &psi).unwrap()).unwrap();
            assert!((back - &psi).norm() < 1e-12);
        }
        assert!(RandomSmoothTrivialization::new(4, 0, 0.5).is_err());
    }

    #[test]
    fn random_smooth_is_not_trivial_and_varies() {
        let l = RandomSmoothTrivialization::new(2, 9, 0.4).unwrap();
        let a = l.l(&[0.0, 0.0]);
        let b = l.l(&[0.7, -0.2]);
        assert!(linalg::max_diff(&a, &b) > 1e-3);
    }

    #[test]
    fn conjugation_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = linalg::random_complex(&mut rng, 4, 4);
        assert!(linalg::max_diff(&conjugate_operator(&RandomSmoothTrivialization::new(4, 1, 0.3).unwrap(), &[0.2], &linalg::eye(4)).unwrap(), &linalg::eye(4)) < 1e-14);
        for seed in 0..5 {
            let l = FnTrivialization::new(4, {
                let m = linalg::random_complex(&mut ChaCha8Rng::seed_from_u64(seed), 4, 4) + linalg::eye(4).scale(2.0);
                move |_| m.clone()
            });
            let conj = conjugate_operator(&l, &[0.0], &op).unwrap();
            assert!(linalg::spectrum_distance(&linalg::eigenvalues(&op), &linalg::eigenvalues(&conj)) < 1e-10);
        }
    }

    #[test]
    fn bundle_gammas_obey_clifford_relations() {
        let rep = dirac_gammas(Convention::MostlyMinus);
        let eta_up: Vec<f64> = Convention::MostlyMinus.eta(4);
        for seed in 0..20 {
            let l = RandomSmoothTrivialization::new(4, seed, 0.45).unwrap();
            let gs = bundle_gammas(&l, &[0.1 * seed as f64, 1.0, -0.5, 2.0], &rep).unwrap();
            assert!(bundle_relation_residual(&gs, &eta_up) < 1e-12);
        }
    }

    #[test]
    fn config_forms() {
        let a: TrivializationConfig = serde_json::from_str(r#"{"kind":"random_smooth","seed":4,"amplitude":0.2}"#).unwrap();
        assert_eq!(a, TrivializationConfig::RandomSmooth { seed: 4, amplitude: 0.2 });
        assert_eq!("random_smooth:4:0.2".parse::<TrivializationConfig>().unwrap(), a);
        assert_eq!("scalar:2".parse::<TrivializationConfig>().unwrap(), TrivializationConfig::Scalar { c: 2.0 });
        assert!("scalar".parse::<TrivializationConfig>().is_err());
        assert!(TrivializationConfig::Scalar { c: 0.0 }.build(2).is_err());
        assert!(TrivializationConfig::RandomSmooth { seed: 1, amplitude: 0.7 }.build(2).is_err());
    }
}
